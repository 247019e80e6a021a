use nslab::forces::{force_wavefront, ForceField, HFunction};
use nslab::geometry::MetricChart;
use nslab::legendre::{to_momentum, to_velocity, StateP, StateU};
use nslab::media::{bundled_symbols, linear_medium_w};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn legendre_round_trip(which in 0usize..5, a in 0.0..1.0f64, b in 0.0..1.0f64, r in 0.3..2.5f64, angle in 0.0..std::f64::consts::TAU) {
        let symbols = bundled_symbols();
        let (name, chart, sym, bx) = &symbols[which % symbols.len()];
        let x = vec![bx[0].0 + a * (bx[0].1 - bx[0].0), bx[1].0 + b * (bx[1].1 - bx[1].0)];
        // Unit covector in the metric, scaled by r.
        let raw = vec![angle.cos(), angle.sin()];
        let scale = r / chart.conorm(&x, &raw).unwrap();
        let p: Vec<f64> = raw.iter().map(|c| c * scale).collect();
        let v = to_velocity(sym, &StateP::new(x.clone(), p.clone())).unwrap();
        let guess = p.iter().map(|c| 1.2 * c).collect::<Vec<_>>().into();
        let back = to_momentum(sym, &v, &guess).unwrap();
        for (got, want) in back.p.iter().zip(&p) {
            prop_assert!((got - want).abs() <= 1e-10 * r.max(1.0), "{name}: {got} vs {want} at {x:?}");
        }
    }

    /// Along the Newtonian flow dW/dt = ∇W·u + W′ d|u|/dt reduces to h(W).
    #[test]
    fn shift_force_drives_w_by_h(x1 in -1.0..1.0f64, x2 in -1.0..1.0f64, speed in 0.3..3.0f64, angle in 0.0..std::f64::consts::TAU, slope in -2.0..2.0f64, intercept in -2.0..2.0f64) {
        let chart = MetricChart::euclidean(2);
        let w = linear_medium_w();
        let x = [x1, x2];
        let u = [speed * angle.cos(), speed * angle.sin()];
        let st = StateU::new(x.to_vec(), u.to_vec());
        let jet = w.jet(&x, speed).unwrap();
        for h in [HFunction::Zero, HFunction::Linear { slope, intercept }] {
            let target = h.eval(jet.w);
            let f = ForceField::new(w.clone(), h).eval(&chart, &st).unwrap();
            let speed_rate: f64 = f.iter().zip(&u).map(|(a, b)| a * b).sum::<f64>() / speed;
            let grad_u: f64 = jet.grad.iter().zip(&u).map(|(a, b)| a * b).sum();
            let rate = grad_u + jet.w1 * speed_rate;
            prop_assert!((rate - target).abs() <= 1e-12 * (1.0 + target.abs() + grad_u.abs()), "{rate} vs {target}");
        }
    }

    #[test]
    fn zero_h_is_the_wavefront_force(x1 in -1.0..1.0f64, x2 in -1.0..1.0f64, u1 in -3.0..3.0f64, u2 in -3.0..3.0f64) {
        prop_assume!(u1.hypot(u2) > 1e-3);
        let chart = MetricChart::euclidean(2);
        let st = StateU::new(vec![x1, x2], vec![u1, u2]);
        let w = linear_medium_w();
        let shift = ForceField::new(w.clone(), HFunction::Zero).eval(&chart, &st).unwrap();
        prop_assert_eq!(shift, force_wavefront(&w, &chart, &st).unwrap());
    }
}
