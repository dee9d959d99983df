use chrono::NaiveDate;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use signalcast::arima::{fit_arima, forecast, ArimaSpec, FitOptions};
use signalcast::eval::{backtest, metrics, BacktestModel};
use signalcast::series::CaseSeries;

fn normals(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

fn ar1(seed: u64, n: usize, phi: f64, c: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let e = normals(&mut rng, n + 100);
    let mut y = vec![c / (1.0 - phi); n + 100];
    for t in 1..y.len() {
        y[t] = c + phi * y[t - 1] + e[t];
    }
    y.split_off(100)
}

#[test]
fn ar1_intervals_match_monte_carlo() {
    let y = ar1(1, 1000, 0.6, 2.0);
    let fit = fit_arima(&y, ArimaSpec::new(1, 0, 0).unwrap(), &[], &FitOptions::default()).unwrap();
    let h = 5;
    let fc = forecast(&fit, h, &[0.05], &[]).unwrap();

    // Simulate future paths from the fitted model itself.
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let sd = fit.sigma2.sqrt();
    let paths = 100_000;
    let mut inside = vec![0usize; h];
    let last = *y.last().unwrap();
    for _ in 0..paths {
        let mut prev = last;
        let band = &fc.bands[0];
        for (step, hits) in inside.iter_mut().enumerate() {
            let e: f64 = StandardNormal.sample(&mut rng);
            prev = fit.intercept + fit.ar[0] * prev + sd * e;
            *hits += (band.lower[step] <= prev && prev <= band.upper[step]) as usize;
        }
    }
    for (step, n) in inside.iter().enumerate() {
        let cover = *n as f64 / paths as f64;
        assert!((cover - 0.95).abs() < 0.005, "step {step}: coverage {cover}");
    }
}

#[test]
fn backtest_fit_ignores_test_segment() {
    let day0 = NaiveDate::from_ymd_opt(2021, 1, 1).unwrap();
    let y = ar1(3, 120, 0.5, 10.0);
    let split = day0 + chrono::Duration::days(99);
    let spec = ArimaSpec::new(1, 0, 1).unwrap();
    let opts = FitOptions::default();
    let clean = backtest(&CaseSeries::new(day0, y.clone()), &[], split, &BacktestModel::Arima(spec), &[0.05], &opts).unwrap();
    let mut poisoned = y;
    for v in &mut poisoned[100..] {
        *v = 1e9;
    }
    let dirty = backtest(&CaseSeries::new(day0, poisoned), &[], split, &BacktestModel::Arima(spec), &[0.05], &opts).unwrap();
    let (a, b) = (clean.arima.unwrap(), dirty.arima.unwrap());
    assert_eq!(a.ar, b.ar);
    assert_eq!(a.ma, b.ma);
    assert_eq!(a.intercept.to_bits(), b.intercept.to_bits());
    assert_eq!(clean.forecast.point, dirty.forecast.point);
    assert_eq!(clean.train_len, 100);
    assert_eq!(clean.test_dates.len(), 20);
}

#[test]
fn arima110_beats_naive_on_trending_series() {
    // Differences follow an AR(1) around a drift of 3 per day.
    let mut wins = 0;
    for seed in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let e = normals(&mut rng, 320);
        let mut dy = vec![3.0; 320];
        for t in 1..320 {
            dy[t] = 3.0 + 0.6 * (dy[t - 1] - 3.0) + e[t];
        }
        let mut y = vec![100.0];
        for d in &dy[1..] {
            y.push(y.last().unwrap() + d);
        }
        let (train, test) = y.split_at(y.len() - 7);
        let fit = fit_arima(train, ArimaSpec::new(1, 1, 0).unwrap(), &[], &FitOptions::default()).unwrap();
        let fc = forecast(&fit, 7, &[], &[]).unwrap();
        let naive = vec![*train.last().unwrap(); 7];
        if metrics(test, &fc.point).unwrap().rmse <= metrics(test, &naive).unwrap().rmse {
            wins += 1;
        }
    }
    assert!(wins >= 45, "ARIMA(1,1,0) beat naive in {wins}/50");
}

#[test]
fn single_step_rmse_is_absolute_error() {
    let m = metrics(&[10.0], &[7.5]).unwrap();
    assert_eq!(m.rmse, 2.5);
    assert_eq!(m.n, 1);
}
