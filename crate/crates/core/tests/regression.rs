use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use reci_core::regress::{fit, mse, split, ModelSpec, SplitConfig};
use reci_core::{seed, Error};

fn sample(n: usize, seed_value: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = seed::rng(seed_value);
    let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let y = x
        .iter()
        .map(|v| (4.0 * v).sin() + 0.05 * (rng.random::<f64>() - 0.5))
        .collect();
    (x, y)
}

#[test]
fn linear_fits_match_pseudo_inverse() {
    let mut rng = seed::rng(11);
    for i in 0..100 {
        let n = rng.random_range(10..=50);
        let (x, y) = sample(n, i);
        let (spec, powers): (ModelSpec, Vec<i32>) = if i % 2 == 0 {
            let k = rng.random_range(1..=5u32);
            (ModelSpec::Poly(k), (0..=k as i32).collect())
        } else {
            let m = rng.random_range(2..=9u32);
            (ModelSpec::Mon(m), vec![m as i32, 0])
        };
        let design = DMatrix::from_fn(n, powers.len(), |r, c| x[r].powi(powers[c]));
        let oracle = design.pseudo_inverse(1e-14).unwrap() * DVector::from_vec(y.clone());
        let got = DVector::from_vec(fit(&spec, &x, &y, 0).unwrap().parameters);
        let rel = (&got - &oracle).norm() / oracle.norm();
        assert!(rel <= 1e-8, "{spec}: relative error {rel:e}");
    }
}

#[test]
fn point_on_curve_does_not_move_poly_fit() {
    for k in 1..=5 {
        let (mut x, mut y) = sample(40, 100 + k as u64);
        let spec = ModelSpec::Poly(k);
        let before = fit(&spec, &x, &y, 0).unwrap();
        x.push(0.42);
        y.push(before.predict(0.42));
        let after = fit(&spec, &x, &y, 0).unwrap();
        for (a, b) in before.parameters.iter().zip(&after.parameters) {
            assert!(
                (a - b).abs() <= 1e-8 * a.abs().max(1.0),
                "poly{k}: {a} vs {b}"
            );
        }
    }
}

#[test]
fn iterative_losses_never_increase() {
    let (x, y) = sample(120, 5);
    for spec in [
        ModelSpec::Log,
        ModelSpec::Nn(vec![5]),
        ModelSpec::Nn(vec![4, 8]),
    ] {
        let model = fit(&spec, &x, &y, 9).unwrap();
        assert!(!model.loss_trace.is_empty());
        for w in model.loss_trace.windows(2) {
            assert!(w[1] <= w[0], "{spec}: loss rose from {} to {}", w[0], w[1]);
        }
        let final_loss = *model.loss_trace.last().unwrap();
        assert!(
            (mse(&model, &x, &y) - final_loss).abs() <= 1e-9 * final_loss.max(1e-12),
            "{spec}"
        );
    }
}

#[test]
fn fits_are_bit_reproducible() {
    let (x, y) = sample(80, 6);
    for spec in [
        ModelSpec::Log,
        ModelSpec::Mon(3),
        ModelSpec::Poly(4),
        ModelSpec::Svr,
        ModelSpec::Nn(vec![2, 4]),
    ] {
        let a = fit(&spec, &x, &y, 77).unwrap();
        let b = fit(&spec, &x, &y, 77).unwrap();
        let bits = |v: &[f64]| v.iter().map(|p| p.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a.parameters), bits(&b.parameters), "{spec}");
    }
}

#[test]
fn repeated_inputs_are_rank_deficient() {
    let x = vec![0.5; 10];
    let y: Vec<f64> = (0..10).map(f64::from).collect();
    assert!(matches!(
        fit(&ModelSpec::Poly(2), &x, &y, 0),
        Err(Error::SingularSystem)
    ));
}

#[test]
fn mse_examples() {
    let zero = fit(&ModelSpec::Poly(1), &[0.0, 1.0, 2.0], &[0.0, 0.0, 0.0], 0).unwrap();
    assert_eq!(mse(&zero, &[0.0, 1.0], &[1.0, -1.0]), 1.0);
    let exact = fit(&ModelSpec::Poly(1), &[0.0, 0.5, 1.0], &[0.0, 0.5, 1.0], 0).unwrap();
    assert!(mse(&exact, &[0.0, 0.5, 1.0], &[0.0, 0.5, 1.0]) < 1e-30);
}

#[test]
fn splits_cover_disjointly() {
    for &fraction in &SplitConfig::FRACTIONS {
        for len in [4, 10, 37, 500] {
            let cfg = SplitConfig::new(fraction, len as u64).unwrap();
            let (train, test) = split(len, &cfg).unwrap();
            let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
            all.sort_unstable();
            assert_eq!(all, (0..len).collect::<Vec<_>>());
            assert_eq!(
                train.len(),
                ((fraction * len as f64).round() as usize).clamp(1, len - 1)
            );
            assert_eq!(split(len, &cfg).unwrap(), (train, test));
        }
    }
}
