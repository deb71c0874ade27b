use multicurve::curves::{DiscountCurve, ForwardCurve};
use multicurve::hjm::{reconstruct_bond, reconstruct_forward, simulate, SimulationGrid, VolatilityParams, VolatilitySpec};
use multicurve::StepFunction;

fn two_factor_stochastic() -> VolatilitySpec {
    VolatilitySpec::new(VolatilityParams {
        a: vec![StepFunction::constant(0.05), StepFunction::constant(0.6)],
        r: vec![vec![0.008, 0.003], vec![0.0, 0.006]],
        kappa: vec![1.2, 0.7],
        theta: vec![1.0, 1.0],
        nu: vec![0.4, 0.3],
        v_bar: vec![1.0, 1.0],
        rho: vec![vec![-0.3, 0.0], vec![0.0, 0.2]],
        q: vec![(0.5, vec![1.1, 0.9])],
    })
    .unwrap()
}

#[test]
fn bond_and_forward_are_martingales_under_stochastic_variance() {
    let spec = two_factor_stochastic();
    let curve0 = DiscountCurve::flat(0.02, 10.0);
    let fwd = ForwardCurve::flat(0.5, 0.025, 10.0).unwrap();
    let grid = SimulationGrid::new(vec![1.5, 2.0, 3.0], 1.0 / 48.0).unwrap();
    let paths = 40_000;
    let ens = simulate(&spec, &grid, paths, 21).unwrap();
    let (i15, i2) = (ens.time_index(1.5).unwrap(), ens.time_index(2.0).unwrap());
    let mut bond = Vec::with_capacity(paths);
    let mut forward = Vec::with_capacity(paths);
    for p in 0..paths {
        // D(0,2)·P(2,3) should average to P0(3)
        let d2 = ens.deflator(&curve0, p, i2).unwrap();
        bond.push(d2 * reconstruct_bond(&ens.state(p, i2), &curve0, &spec, 3.0).unwrap() / curve0.discount_factor(3.0).unwrap());
        let f = reconstruct_forward(&ens.state(p, i15), &fwd, &spec, 2.0).unwrap();
        forward.push(ens.deflator(&curve0, p, i2).unwrap() / curve0.discount_factor(2.0).unwrap() * f);
    }
    for (z, target) in [(bond, 1.0), (forward, 0.025)] {
        let n = z.len() as f64;
        let mean = z.iter().sum::<f64>() / n;
        let se = (z.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt();
        assert!((mean - target).abs() <= 4.0 * se, "mean {mean} target {target} se {se}");
    }
}

#[test]
fn variance_stays_nonnegative_when_feller_fails() {
    let spec = VolatilitySpec::new(VolatilityParams {
        kappa: vec![0.5],
        theta: vec![0.02],
        nu: vec![0.6],
        v_bar: vec![0.02],
        ..Default::default()
    })
    .unwrap();
    let grid = SimulationGrid::regular(3.0, 0.25, 1.0 / 52.0, &[]).unwrap();
    let ens = simulate(&spec, &grid, 2000, 4).unwrap();
    for p in 0..ens.num_paths() {
        for i in 0..ens.times().len() {
            assert!(ens.state(p, i).v[0] >= 0.0);
        }
    }
}

#[test]
fn paths_do_not_depend_on_thread_count() {
    let spec = two_factor_stochastic();
    let grid = SimulationGrid::regular(2.0, 0.5, 1.0 / 24.0, &[]).unwrap();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| simulate(&spec, &grid, 257, 99).unwrap())
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn seeds_give_different_paths() {
    let spec = VolatilitySpec::one_factor(0.1, 0.01);
    let grid = SimulationGrid::regular(1.0, 0.5, 0.1, &[]).unwrap();
    assert_ne!(simulate(&spec, &grid, 10, 1).unwrap(), simulate(&spec, &grid, 10, 2).unwrap());
}

#[test]
fn zero_volatility_recovers_initial_curves() {
    let spec = VolatilitySpec::zero_volatility(3);
    let curve0 = DiscountCurve::flat(0.03, 10.0);
    let fwd = ForwardCurve::flat(0.25, 0.031, 10.0).unwrap();
    let grid = SimulationGrid::regular(5.0, 1.0, 0.1, &[]).unwrap();
    let ens = simulate(&spec, &grid, 5, 1).unwrap();
    for p in 0..5 {
        for (i, &t) in ens.times().iter().enumerate() {
            let s = ens.state(p, i);
            let expected = curve0.discount_factor(8.0).unwrap() / curve0.discount_factor(t).unwrap();
            assert!((reconstruct_bond(&s, &curve0, &spec, 8.0).unwrap() - expected).abs() < 1e-12);
            assert!((reconstruct_forward(&s, &fwd, &spec, 6.0).unwrap() - 0.031).abs() < 1e-12);
            assert!((ens.deflator(&curve0, p, i).unwrap() - curve0.discount_factor(t).unwrap()).abs() < 1e-15);
        }
    }
}
