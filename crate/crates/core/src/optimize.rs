//! BFGS with a strong-Wolfe line search, plus finite-difference gradients.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BfgsConfig {
    pub max_iterations: usize,
    /// Stop when the gradient infinity norm drops below this.
    pub gtol: f64,
    /// Stop when the relative decrease of `f` stays below this for
    /// several consecutive iterations.
    pub ftol: f64,
}

impl Default for BfgsConfig {
    fn default() -> Self {
        Self {
            max_iterations: 5000,
            gtol: 1e-7,
            ftol: 1e-13,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BfgsResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

const C1: f64 = 1e-4;
const C2: f64 = 0.9;
const STALL_ITERATIONS: usize = 5;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

struct Point {
    alpha: f64,
    f: f64,
    df: f64,
    g: Vec<f64>,
}

struct Counted<F> {
    f: F,
    evals: usize,
}

impl<F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>> Counted<F> {
    fn eval(&mut self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.evals += 1;
        let (f, g) = (self.f)(x)?;
        if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("objective"));
        }
        Ok((f, g))
    }

    fn at(&mut self, x: &[f64], d: &[f64], alpha: f64) -> Result<Point> {
        let y: Vec<f64> = x.iter().zip(d).map(|(a, b)| a + alpha * b).collect();
        let (f, g) = self.eval(&y)?;
        Ok(Point {
            alpha,
            f,
            df: dot(&g, d),
            g,
        })
    }
}

/// Minimizer of the cubic interpolating two points, safeguarded into the
/// interior of the bracket.
fn interpolate(lo: &Point, hi: &Point) -> f64 {
    let (a, b) = (lo.alpha, hi.alpha);
    let d1 = lo.df + hi.df - 3.0 * (lo.f - hi.f) / (a - b);
    let disc = d1 * d1 - lo.df * hi.df;
    let mid = 0.5 * (a + b);
    if disc < 0.0 {
        return mid;
    }
    let d2 = (b - a).signum() * disc.sqrt();
    let t = b - (b - a) * (hi.df + d2 - d1) / (hi.df - lo.df + 2.0 * d2);
    let (lo_b, hi_b) = (a.min(b), a.max(b));
    let margin = 0.1 * (hi_b - lo_b);
    if !t.is_finite() || t < lo_b + margin || t > hi_b - margin {
        mid
    } else {
        t
    }
}

/// Strong-Wolfe line search along `d` from `x`; `None` if no acceptable
/// step was found.
fn line_search<F>(obj: &mut Counted<F>, x: &[f64], f0: f64, df0: f64, d: &[f64], alpha0: f64) -> Result<Option<Point>>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    const MAX_STEPS: usize = 40;
    let start = Point {
        alpha: 0.0,
        f: f0,
        df: df0,
        g: Vec::new(),
    };
    let mut prev = start;
    let mut alpha = alpha0;
    for i in 0..MAX_STEPS {
        let cur = obj.at(x, d, alpha)?;
        if cur.f > f0 + C1 * alpha * df0 || (i > 0 && cur.f >= prev.f) {
            return zoom(obj, x, f0, df0, d, prev, cur);
        }
        if cur.df.abs() <= -C2 * df0 {
            return Ok(Some(cur));
        }
        if cur.df >= 0.0 {
            return zoom(obj, x, f0, df0, d, cur, prev);
        }
        prev = cur;
        alpha *= 2.0;
    }
    Ok(None)
}

fn zoom<F>(obj: &mut Counted<F>, x: &[f64], f0: f64, df0: f64, d: &[f64], mut lo: Point, mut hi: Point) -> Result<Option<Point>>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    const MAX_STEPS: usize = 40;
    for _ in 0..MAX_STEPS {
        let alpha = interpolate(&lo, &hi);
        if (hi.alpha - lo.alpha).abs() < 1e-16 * lo.alpha.abs().max(1.0) {
            break;
        }
        let cur = obj.at(x, d, alpha)?;
        if cur.f > f0 + C1 * alpha * df0 || cur.f >= lo.f {
            hi = cur;
        } else {
            if cur.df.abs() <= -C2 * df0 {
                return Ok(Some(cur));
            }
            if cur.df * (hi.alpha - lo.alpha) >= 0.0 {
                hi = lo;
            }
            lo = cur;
        }
    }
    // Accept the best sufficient-decrease point found, if any.
    Ok((lo.alpha > 0.0 && lo.f < f0).then_some(lo))
}

/// Minimizes `f` from `x0`. The objective returns value and gradient.
pub fn bfgs<F>(f: F, x0: &[f64], cfg: &BfgsConfig) -> Result<BfgsResult>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let n = x0.len();
    let mut obj = Counted { f, evals: 0 };
    let mut x = x0.to_vec();
    let (mut fx, mut g) = obj.eval(&x)?;
    // Row-major inverse Hessian; `None` means "scaled identity pending".
    let mut hinv: Option<Vec<f64>> = None;
    let mut stall = 0;
    let mut iterations = 0;
    let mut converged = inf_norm(&g) < cfg.gtol;
    while !converged && iterations < cfg.max_iterations {
        iterations += 1;
        let d: Vec<f64> = match &hinv {
            Some(h) => (0..n).map(|i| -dot(&h[i * n..(i + 1) * n], &g)).collect(),
            None => g.iter().map(|v| -v).collect(),
        };
        let mut df0 = dot(&g, &d);
        let (d, alpha0) = if df0 < 0.0 {
            let a0 = if hinv.is_none() { (1.0 / inf_norm(&g)).min(1.0) } else { 1.0 };
            (d, a0)
        } else {
            hinv = None;
            df0 = -dot(&g, &g);
            (g.iter().map(|v| -v).collect(), (1.0 / inf_norm(&g)).min(1.0))
        };
        let Some(step) = line_search(&mut obj, &x, fx, df0, &d, alpha0)? else {
            if hinv.is_some() {
                hinv = None;
                continue;
            }
            break;
        };
        let s: Vec<f64> = d.iter().map(|v| v * step.alpha).collect();
        let y: Vec<f64> = step.g.iter().zip(&g).map(|(a, b)| a - b).collect();
        x.iter_mut().zip(&s).for_each(|(a, b)| *a += b);
        let rel = (fx - step.f) / fx.abs().max(1.0);
        fx = step.f;
        g = step.g;
        stall = if rel < cfg.ftol { stall + 1 } else { 0 };
        converged = inf_norm(&g) < cfg.gtol || stall >= STALL_ITERATIONS;
        let sy = dot(&s, &y);
        if sy <= 1e-14 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            continue;
        }
        let h = hinv.get_or_insert_with(|| {
            let scale = sy / dot(&y, &y);
            let mut h = vec![0.0; n * n];
            (0..n).for_each(|i| h[i * n + i] = scale);
            h
        });
        // H <- (I - ρ s yᵀ) H (I - ρ y sᵀ) + ρ s sᵀ
        let rho = 1.0 / sy;
        let hy: Vec<f64> = (0..n).map(|i| dot(&h[i * n..(i + 1) * n], &y)).collect();
        let yhy = dot(&y, &hy);
        let c = rho * rho * yhy + rho;
        for i in 0..n {
            let row = &mut h[i * n..(i + 1) * n];
            for j in 0..n {
                row[j] += c * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
            }
        }
    }
    Ok(BfgsResult {
        x,
        f: fx,
        iterations,
        evaluations: obj.evals,
        converged,
    })
}

/// Central-difference gradient with step `h`.
pub fn central_difference<F>(mut f: F, x: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let mut y = x.to_vec();
    let mut g = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        y[i] = x[i] + h;
        let fp = f(&y)?;
        y[i] = x[i] - h;
        let fm = f(&y)?;
        y[i] = x[i];
        g.push((fp - fm) / (2.0 * h));
    }
    Ok(g)
}

/// Five-point-stencil gradient with step `h`.
pub fn five_point_difference<F>(mut f: F, x: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let mut y = x.to_vec();
    let mut g = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let mut at = |t: f64| {
            y[i] = x[i] + t;
            f(&y)
        };
        let v = (-at(2.0 * h)? + 8.0 * at(h)? - 8.0 * at(-h)? + at(-2.0 * h)?) / (12.0 * h);
        y[i] = x[i];
        g.push(v);
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let (a, b) = (x[0], x[1]);
        let f = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
        let g = vec![-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)];
        Ok((f, g))
    }

    #[test]
    fn minimizes_rosenbrock() {
        let r = bfgs(rosenbrock, &[-1.2, 1.0], &BfgsConfig::default()).unwrap();
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] - 1.0).abs() < 1e-6, "{:?}", r.x);
    }

    #[test]
    fn quadratic_in_few_steps() {
        let a = [3.0, 1.0, 0.5];
        let f = |x: &[f64]| -> Result<(f64, Vec<f64>)> {
            let v = x.iter().zip(&a).map(|(x, a)| 0.5 * a * (x - 1.0).powi(2)).sum();
            Ok((v, x.iter().zip(&a).map(|(x, a)| a * (x - 1.0)).collect()))
        };
        let r = bfgs(f, &[0.0; 3], &BfgsConfig::default()).unwrap();
        assert!(r.iterations < 20);
        assert!(r.x.iter().all(|v| (v - 1.0).abs() < 1e-8));
    }

    #[test]
    fn zero_iterations_returns_start() {
        let cfg = BfgsConfig {
            max_iterations: 0,
            ..Default::default()
        };
        let r = bfgs(rosenbrock, &[0.3, 0.2], &cfg).unwrap();
        assert_eq!(r.x, vec![0.3, 0.2]);
        assert_eq!(r.f, rosenbrock(&[0.3, 0.2]).unwrap().0);
    }

    #[test]
    fn non_finite_objective_errors() {
        let f = |_: &[f64]| -> Result<(f64, Vec<f64>)> { Ok((f64::NAN, vec![0.0])) };
        assert!(bfgs(f, &[0.0], &BfgsConfig::default()).is_err());
    }

    #[test]
    fn difference_stencils_agree() {
        let f = |x: &[f64]| Ok(x[0].sin() * x[1].exp());
        let x = [0.4, -0.3];
        let g2 = central_difference(f, &x, 1e-4).unwrap();
        let g4 = five_point_difference(f, &x, 5e-5).unwrap();
        let exact = [x[0].cos() * x[1].exp(), x[0].sin() * x[1].exp()];
        for i in 0..2 {
            assert!((g2[i] - exact[i]).abs() < 1e-8);
            assert!((g4[i] - g2[i]).abs() < 1e-4 * exact[i].abs());
        }
    }
}
