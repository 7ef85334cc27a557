use xyz_dynamics::closed::{run_quench, QuenchSpec, TimeGrid};
use xyz_dynamics::model::{DecayLaw, ModelSpec};
use xyz_dynamics::open::{
    rk4_integrate, rk4_integrate_with, BathSpec, BosonicBathSpec, NoiseAxis, OpenRunSpec, RepetitiveBathSpec,
};
use xyz_dynamics::operator::{herm_eigenvalues, SiteIndex};
use xyz_dynamics::thermal::Beta;

fn s(i: usize) -> SiteIndex {
    SiteIndex::new(i).unwrap()
}

fn model() -> ModelSpec {
    ModelSpec {
        nsites: 6,
        gamma: 0.8,
        lambda: 1.2,
        delta: 0.5,
        coordination: 3,
        decay: DecayLaw::exponential(2.0).unwrap(),
    }
}

fn pairs() -> Vec<(SiteIndex, SiteIndex)> {
    vec![(s(3), s(4)), (s(3), s(5)), (s(2), s(6))]
}

#[test]
fn open_run_without_coupling_reproduces_the_quench() {
    let grid = TimeGrid::new(0.0, 2.0, 0.01).unwrap();
    let beta = Beta::Finite(50.0);
    let closed = run_quench(&QuenchSpec { model: model(), beta, grid, pairs: pairs() }).unwrap();

    let silent = RepetitiveBathSpec { k: 0.0, attached: vec![s(1), s(2)], ..Default::default() };
    let mut spec = OpenRunSpec::new(model(), BathSpec::Repetitive(silent), grid, pairs());
    spec.beta = beta;
    spec.quench_field = true;
    let open = rk4_integrate(&spec).unwrap();

    let mut worst: f64 = 0.0;
    for (c, o) in closed.iter().zip(&open.series) {
        assert_eq!(c.pair(), o.pair());
        for (a, b) in c.values().iter().zip(o.values()) {
            worst = worst.max((a - b).abs());
        }
    }
    assert!(worst < 1e-5, "open vs closed deviation {worst:e}");
    // the quench actually moves the pairs, so the comparison is not vacuous
    let moved = closed[0].values().iter().map(|v| (v - closed[0].values()[0]).abs()).fold(0.0, f64::max);
    assert!(moved > 1e-3);
}

#[test]
fn dissipative_runs_stay_physical() {
    let grid = TimeGrid::new(0.0, 1.5, 0.01).unwrap();
    let baths = [
        BathSpec::Repetitive(RepetitiveBathSpec { k: 0.3, attached: vec![s(1), s(2), s(3)], ..Default::default() }),
        BathSpec::Bosonic(BosonicBathSpec { axis: NoiseAxis::X, attached: vec![s(1), s(6)], ..Default::default() }),
        BathSpec::Bosonic(BosonicBathSpec { ohmicity: 2.0, cutoff: 3.0, ..Default::default() }),
    ];
    for bath in baths {
        let spec = OpenRunSpec::new(model(), bath.clone(), grid, pairs());
        let mut samples = 0;
        let run = rk4_integrate_with(&spec, |t, rho| {
            samples += 1;
            assert!((rho.trace().re - 1.0).abs() < 1e-8, "{bath:?} trace at t={t}");
            assert!(rho.hermitian_residual() < 1e-8, "{bath:?} hermiticity at t={t}");
            if samples % 25 == 1 {
                assert!(herm_eigenvalues(rho).unwrap()[0] >= -1e-6, "{bath:?} positivity at t={t}");
            }
        })
        .unwrap();
        assert_eq!(samples, grid.len());
        assert!(run.min_eigenvalue >= -1e-6);
        for series in &run.series {
            assert_eq!(series.values().len(), grid.len());
            assert!(series.values().iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }
}
