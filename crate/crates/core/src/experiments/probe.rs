//! Logistic-regression probe used to check how much label signal a set of
//! per-node features carries.

const ITERATIONS: usize = 2000;
const STEP: f64 = 0.5;

/// Training accuracy of a logistic regression fitted by full-batch gradient
/// descent on standardized features. Constant columns are dropped, so a
/// probe without usable features predicts the majority class.
pub fn logistic_probe_accuracy(features: &[Vec<f64>], labels: &[usize]) -> f64 {
    let n = labels.len();
    if n == 0 {
        return 0.0;
    }
    let d = features.first().map_or(0, Vec::len);
    let mut cols: Vec<Vec<f64>> = Vec::new();
    for j in 0..d {
        let col: Vec<f64> = features.iter().map(|r| r[j]).collect();
        let mean = col.iter().sum::<f64>() / n as f64;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        if var > 1e-12 {
            let sd = var.sqrt();
            cols.push(col.iter().map(|v| (v - mean) / sd).collect());
        }
    }
    let y: Vec<f64> = labels.iter().map(|&l| (l == 1) as u8 as f64).collect();
    let mut w = vec![0.0; cols.len()];
    let mut b = 0.0;
    let logit = |w: &[f64], b: f64, i: usize| b + cols.iter().zip(w).map(|(c, wj)| c[i] * wj).sum::<f64>();
    for _ in 0..ITERATIONS {
        let mut gw = vec![0.0; w.len()];
        let mut gb = 0.0;
        for i in 0..n {
            let r = 1.0 / (1.0 + (-logit(&w, b, i)).exp()) - y[i];
            gb += r;
            for (g, c) in gw.iter_mut().zip(&cols) {
                *g += r * c[i];
            }
        }
        b -= STEP * gb / n as f64;
        for (wj, g) in w.iter_mut().zip(&gw) {
            *wj -= STEP * g / n as f64;
        }
    }
    let correct = (0..n).filter(|&i| (logit(&w, b, i) > 0.0) == (y[i] == 1.0)).count();
    correct as f64 / n as f64
}
