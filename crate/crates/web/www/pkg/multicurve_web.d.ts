/* tslint:disable */
/* eslint-disable */

/**
 * Bootstraps curves from quote CSV; returns discount factors and zero
 * rates on a monthly grid, forward pillars per tenor and the worst
 * repricing error.
 */
export function bootstrap_curves(quotes_csv: string): string;

/**
 * Percentile bands of the simulated spot forward `F_t(t+x)` under a
 * one-factor model.
 */
export function forward_fan(quotes_csv: string, tenor: number, a: number, sigma: number, paths: number, seed: bigint, horizon: number): string;

/**
 * Clean and adjusted value of a receive-fixed swap for each collateral
 * fraction in `alphas`.
 */
export function swap_explorer(quotes_csv: string, fixed_rate: number, alphas: Float64Array, lambda_ci: number, lgd_c: number, funding_spread: number, paths: number, seed: bigint): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly bootstrap_curves: (a: number, b: number) => [number, number, number, number];
    readonly forward_fan: (a: number, b: number, c: number, d: number, e: number, f: number, g: bigint, h: number) => [number, number, number, number];
    readonly swap_explorer: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number, j: bigint) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
