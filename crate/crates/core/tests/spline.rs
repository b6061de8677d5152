use proptest::prelude::*;
use yieldlag::ingest::{RawSeries, Variable};
use yieldlag::timeseries::{self, NaturalCubicSpline};
use yieldlag::weeks::week_monday;
use yieldlag_oracles::SlopeSpline;

/// Knot days from positive gaps, starting in early 2015.
fn knots(gaps: &[i64]) -> Vec<f64> {
    let mut t = vec![16_440.0];
    for g in gaps {
        t.push(t.last().unwrap() + *g as f64);
    }
    t
}

fn series_strategy() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (3usize..30).prop_flat_map(|n| {
        (
            proptest::collection::vec(1i64..25, n),
            proptest::collection::vec(-50.0f64..50.0, n + 1),
        )
            .prop_map(|(gaps, y)| (knots(&gaps), y))
    })
}

proptest! {
    #[test]
    fn passes_through_every_knot((t, y) in series_strategy()) {
        let s = NaturalCubicSpline::fit(&t, &y).unwrap();
        let scale = y.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for (ti, yi) in t.iter().zip(&y) {
            prop_assert!((s.eval(*ti).unwrap() - yi).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn agrees_with_slope_form_oracle((t, y) in series_strategy(), probes in proptest::collection::vec(0.0f64..1.0, 20)) {
        let s = NaturalCubicSpline::fit(&t, &y).unwrap();
        let oracle = SlopeSpline::new(&t, &y);
        let (a, b) = (t[0], *t.last().unwrap());
        let scale = y.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for u in probes {
            let x = a + u * (b - a);
            prop_assert!((s.eval(x).unwrap() - oracle.eval(x).unwrap()).abs() <= 1e-9 * scale);
        }
    }

    #[test]
    fn never_extrapolates((t, y) in series_strategy(), before in 0.001f64..100.0, after in 0.001f64..100.0) {
        let s = NaturalCubicSpline::fit(&t, &y).unwrap();
        prop_assert!(s.eval(t[0] - before).is_none());
        prop_assert!(s.eval(t.last().unwrap() + after).is_none());
    }

    #[test]
    fn resamples_affine_data_exactly(gaps in proptest::collection::vec(1i64..20, 5..30), a in -10.0f64..10.0, b in -0.05f64..0.05) {
        let t = knots(&gaps);
        let line = |d: f64| a + b * (d - t[0]);
        let points = t.iter().map(|&d| (d as i64, line(d))).collect();
        let raw = RawSeries::new(9, Variable::Prec, points).unwrap();
        let model = timeseries::fit_natural_cubic_spline(&raw).unwrap();
        if let Some((start, n)) = timeseries::covered_weeks(&model) {
            let weekly = timeseries::resample_weekly(&model, start, n).unwrap();
            for (k, v) in weekly.values.iter().enumerate() {
                prop_assert!((v - line(week_monday(start + k as i64) as f64)).abs() <= 1e-10);
            }
        }
    }
}

#[test]
fn weekly_samples_fall_on_mondays_inside_the_span() {
    // 16-day composites from Thursday 2015-01-01
    let points: Vec<(i64, f64)> = (0..10).map(|k| (16_436 + 16 * k, 0.3 + 0.01 * k as f64)).collect();
    let raw = RawSeries::new(1, Variable::Ndvi, points.clone()).unwrap();
    let model = timeseries::fit_natural_cubic_spline(&raw).unwrap();
    let (start, n) = timeseries::covered_weeks(&model).unwrap();
    let first_monday = week_monday(start);
    assert!(first_monday >= points[0].0 && first_monday - 7 < points[0].0);
    let last_monday = week_monday(start + n as i64 - 1);
    assert!(last_monday <= points[9].0 && last_monday + 7 > points[9].0);
    // 1970-01-05 was a Monday
    assert_eq!((first_monday - 4).rem_euclid(7), 0);
    assert!(timeseries::resample_weekly(&model, start - 1, 1).is_err());
}
