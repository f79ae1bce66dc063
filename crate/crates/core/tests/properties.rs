use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use heatgauge_core::fw::GroundStateModel;
use heatgauge_core::lattice::{canonical_lift, project_config};
use heatgauge_core::mc::stats::block_means;
use heatgauge_core::{Boundary, FieldConfig, GroupElement, GroupKind, HeatKernel, Lattice, LatticeSpec};

fn kind() -> impl Strategy<Value = GroupKind> {
    prop_oneof![Just(GroupKind::Circle), Just(GroupKind::UnitQuaternion)]
}

fn elements(kind: GroupKind, seed: u64, n: usize) -> Vec<GroupElement> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| kind.haar_sample(&mut rng)).collect()
}

fn close(a: &GroupElement, b: &GroupElement) -> bool {
    a.multiply(&b.inverse()).unwrap().cc_distance() < 1e-9
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn group_axioms(kind in kind(), seed in any::<u64>()) {
        let v = elements(kind, seed, 3);
        let (g, h, k) = (&v[0], &v[1], &v[2]);
        let left = g.multiply(h).unwrap().multiply(k).unwrap();
        let right = g.multiply(&h.multiply(k).unwrap()).unwrap();
        prop_assert!(close(&left, &right));
        prop_assert!(close(&g.multiply(&kind.identity()).unwrap(), g));
        prop_assert!(g.multiply(&g.inverse()).unwrap().cc_distance() < 1e-9);
    }

    #[test]
    fn characters_are_class_functions(kind in kind(), seed in any::<u64>(), label in 0i64..6) {
        let v = elements(kind, seed, 2);
        let irrep = kind.irrep(label).unwrap();
        let conj = v[0].conjugate_by(&v[1]).unwrap();
        let a = irrep.character(&v[0]).unwrap();
        let b = irrep.character(&conj).unwrap();
        prop_assert!((a - b).norm() < 1e-9);
        prop_assert!(a.norm() <= irrep.dim() as f64 + 1e-9);
        let e = irrep.character(&kind.identity()).unwrap();
        prop_assert!((e.re - irrep.dim() as f64).abs() < 1e-12);
    }

    #[test]
    fn heat_kernel_positive_symmetric_and_peaked(
        kind in kind(), seed in any::<u64>(), beta in 0.05f64..3.0,
    ) {
        let k = HeatKernel::new(kind, beta).unwrap();
        let v = elements(kind, seed, 2);
        let g = &v[0];
        let kg = k.eval(g).unwrap();
        prop_assert!(kg > 0.0);
        prop_assert!((kg - k.eval(&g.inverse()).unwrap()).abs() <= 1e-10 * kg.max(1.0));
        let conj = g.conjugate_by(&v[1]).unwrap();
        prop_assert!((kg - k.eval(&conj).unwrap()).abs() <= 1e-10 * kg.max(1.0));
        prop_assert!(kg <= k.eval(&kind.identity()).unwrap() * (1.0 + 1e-12));
    }

    #[test]
    fn heat_kernel_has_unit_mass(kind in kind(), beta in 0.05f64..3.0) {
        let k = HeatKernel::new(kind, beta).unwrap();
        prop_assert!((k.coefficients().haar_integral().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lattice_counts(
        extents in prop::collection::vec(2usize..5, 2..=3),
        periodic in any::<bool>(),
    ) {
        let boundary = if periodic { Boundary::Periodic } else { Boundary::Open };
        let spec = LatticeSpec::new(extents, 0, boundary).unwrap();
        let lattice = Lattice::build(spec.clone()).unwrap();
        prop_assert_eq!(lattice.edges().len(), spec.expected_edge_count().unwrap());
        prop_assert_eq!(lattice.plaquettes().len(), spec.expected_plaquette_count().unwrap());
        for p in lattice.plaquettes() {
            let mut ids = p.edges.to_vec();
            ids.sort_unstable();
            ids.dedup();
            prop_assert_eq!(ids.len(), 4);
        }
    }

    #[test]
    fn plaquette_classes_are_gauge_invariant(kind in kind(), seed in any::<u64>(), periodic in any::<bool>()) {
        let boundary = if periodic { Boundary::Periodic } else { Boundary::Open };
        let lattice = Lattice::build(LatticeSpec::new(vec![3, 3], 0, boundary).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let config = FieldConfig::random(kind, &lattice, &mut rng);
        let gauge: Vec<_> = (0..lattice.n_sites()).map(|_| kind.haar_sample(&mut rng)).collect();
        let moved = config.gauge_transform(&lattice, &gauge).unwrap();
        for p in lattice.plaquettes() {
            let a = config.plaquette_product(p).unwrap().class_angle();
            let b = moved.plaquette_product(p).unwrap().class_angle();
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn projection_inverts_lift(kind in kind(), seed in any::<u64>()) {
        let coarse = Lattice::build(LatticeSpec::new(vec![2, 2], 0, Boundary::Open).unwrap()).unwrap();
        let fine = Lattice::build(coarse.spec().refined()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let config = FieldConfig::random(kind, &coarse, &mut rng);
        let back = project_config(&canonical_lift(&config, &coarse, &fine).unwrap(), &fine, &coarse).unwrap();
        for (a, b) in config.links.iter().zip(&back.links) {
            prop_assert!(close(a, b));
        }
    }

    #[test]
    fn block_means_preserve_the_mean(values in prop::collection::vec(-10.0f64..10.0, 20..200)) {
        let n = values.len() - values.len() % 10;
        let values = &values[..n];
        let blocks = block_means(values, 10).unwrap();
        let a = blocks.iter().sum::<f64>() / 10.0;
        let b = values.iter().sum::<f64>() / n as f64;
        prop_assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn link_drift_points_home(kind in kind(), beta in 0.2f64..2.0, seed in any::<u64>(), r in 0.05f64..2.5) {
        let model = GroundStateModel::single_link(kind, beta).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dir: Vec<f64> = (0..model.dim()).map(|_| rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng)).collect();
        let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
        let theta: Vec<f64> = dir.iter().map(|x| r * x / norm).collect();
        let b = model.drift(&theta).unwrap();
        prop_assert!(b.iter().zip(&theta).map(|(x, y)| x * y).sum::<f64>() < 0.0);
        // drift is half the gradient of the log density
        let h = 1e-6;
        for i in 0..theta.len() {
            let mut up = theta.clone();
            let mut down = theta.clone();
            up[i] += h;
            down[i] -= h;
            let fd = (model.log_density(&up).unwrap() - model.log_density(&down).unwrap()) / (4.0 * h);
            prop_assert!((fd - b[i]).abs() < 1e-5 * (1.0 + b[i].abs()));
        }
    }
}
