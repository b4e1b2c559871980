//! Closed-form queueing results used to validate the simulator at its
//! exponential (SCV = 1) operating points, plus a truncated CTMC solver
//! that cross-checks the formulas.

use crate::error::{domain, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mm1Result {
    pub rho: f64,
    pub l: f64,
    pub lq: f64,
    pub w: f64,
    pub wq: f64,
}

fn check_rates(lambda: f64, mu: f64) -> Result<()> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(domain(format!("arrival rate must be >= 0, got {lambda}")));
    }
    if !(mu.is_finite() && mu > 0.0) {
        return Err(domain(format!("service rate must be > 0, got {mu}")));
    }
    Ok(())
}

/// M/M/1 steady-state means.
pub fn mm1(lambda: f64, mu: f64) -> Result<Mm1Result> {
    check_rates(lambda, mu)?;
    if lambda >= mu {
        return Err(Error::Unstable(format!("M/M/1 with λ={lambda} >= μ={mu}")));
    }
    let rho = lambda / mu;
    let w = 1.0 / (mu - lambda);
    let wq = rho / (mu - lambda);
    Ok(Mm1Result {
        rho,
        l: lambda * w,
        lq: lambda * wq,
        w,
        wq,
    })
}

/// Blocking probability of M/M/1/N, where `n_total` counts the job in service.
pub fn mm1n_loss(lambda: f64, mu: f64, n_total: usize) -> Result<f64> {
    check_rates(lambda, mu)?;
    if lambda == 0.0 {
        return Ok(0.0);
    }
    if n_total == 0 {
        return Err(domain("system size must be at least 1"));
    }
    let rho = lambda / mu;
    let n = n_total as i32;
    if (rho - 1.0).abs() < 1e-12 {
        return Ok(1.0 / (n_total as f64 + 1.0));
    }
    Ok((1.0 - rho) * rho.powi(n) / (1.0 - rho.powi(n + 1)))
}

/// Erlang-C probability that an arrival has to wait in M/M/c.
pub fn erlang_c(lambda: f64, mu: f64, c: usize) -> Result<f64> {
    check_rates(lambda, mu)?;
    if c == 0 {
        return Err(domain("server count must be >= 1"));
    }
    if lambda >= c as f64 * mu {
        return Err(Error::Unstable(format!("M/M/{c} with λ={lambda} >= cμ")));
    }
    let a = lambda / mu;
    let rho = a / c as f64;
    // Σ_{k<c} a^k/k! and a^c/c! built incrementally
    let mut term = 1.0;
    let mut sum = 0.0;
    for k in 0..c {
        sum += term;
        term *= a / (k + 1) as f64;
    }
    let tail = term / (1.0 - rho);
    Ok(tail / (sum + tail))
}

/// Mean waiting time in queue of M/M/c.
pub fn erlang_c_wq(lambda: f64, mu: f64, c: usize) -> Result<f64> {
    let pw = erlang_c(lambda, mu, c)?;
    Ok(pw / (c as f64 * mu - lambda))
}

/// Mean response times `(W1, W2)` of a two-class M/M/1 queue where class 1
/// preempts class 2 and preempted work resumes.
pub fn mm1_preemptive_resume(lambda1: f64, lambda2: f64, mu: f64) -> Result<(f64, f64)> {
    check_rates(lambda1, mu)?;
    check_rates(lambda2, mu)?;
    let rho1 = lambda1 / mu;
    let rho2 = lambda2 / mu;
    if rho1 + rho2 >= 1.0 {
        return Err(Error::Unstable(format!(
            "two-class M/M/1 with total load {}",
            rho1 + rho2
        )));
    }
    let w1 = 1.0 / (mu - lambda1);
    let w2 = (1.0 / mu) / (1.0 - rho1) + ((rho1 + rho2) / mu) / ((1.0 - rho1) * (1.0 - rho1 - rho2));
    Ok((w1, w2))
}

/// Finite continuous-time Markov chain given by its transition rates.
#[derive(Debug, Clone, Default)]
pub struct Ctmc {
    states: usize,
    transitions: Vec<(usize, usize, f64)>,
}

impl Ctmc {
    pub fn new(states: usize) -> Self {
        Self {
            states,
            transitions: Vec::new(),
        }
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn add(&mut self, from: usize, to: usize, rate: f64) {
        assert!(from < self.states && to < self.states);
        if from != to && rate > 0.0 {
            self.transitions.push((from, to, rate));
        }
    }

    /// Solves `πQ = 0, Σπ = 1` by banded Gaussian elimination.
    ///
    /// State 0 is pinned to 1 and its balance equation dropped; the
    /// remaining system is column diagonally dominant, so no pivoting is
    /// needed and fill-in stays inside the band.
    pub fn steady_state(&self) -> Result<Vec<f64>> {
        let n = self.states;
        if n == 0 {
            return Err(domain("empty chain"));
        }
        if n == 1 {
            return Ok(vec![1.0]);
        }
        let band = self
            .transitions
            .iter()
            .map(|&(i, j, _)| i.abs_diff(j))
            .max()
            .unwrap_or(0);
        if band == 0 {
            return Err(domain("chain has no transitions"));
        }
        let m = n - 1;
        let width = 2 * band + 1;
        let mut a = vec![0.0f64; m * width];
        let mut b = vec![0.0f64; m];
        let idx = |row: usize, col: usize| row * width + (col + band - row);

        // unknown k ↔ state k+1; equation k ↔ balance of state k+1
        for &(from, to, rate) in &self.transitions {
            if from != 0 {
                a[idx(from - 1, from - 1)] -= rate;
            }
            if to == 0 {
                continue;
            }
            if from == 0 {
                b[to - 1] -= rate;
            } else {
                a[idx(to - 1, from - 1)] += rate;
            }
        }

        for k in 0..m {
            let pivot = a[idx(k, k)];
            if pivot == 0.0 {
                return Err(Error::Logic(format!("singular generator at state {}", k + 1)));
            }
            let last = (k + band).min(m - 1);
            for i in k + 1..=last {
                let factor = a[idx(i, k)] / pivot;
                if factor == 0.0 {
                    continue;
                }
                for j in k..=last {
                    a[idx(i, j)] -= factor * a[idx(k, j)];
                }
                b[i] -= factor * b[k];
            }
        }
        let mut x = vec![0.0f64; m];
        for k in (0..m).rev() {
            let last = (k + band).min(m - 1);
            let mut s = b[k];
            for j in k + 1..=last {
                s -= a[idx(k, j)] * x[j];
            }
            x[k] = s / a[idx(k, k)];
        }
        let mut pi = Vec::with_capacity(n);
        pi.push(1.0);
        pi.extend(x);
        let total: f64 = pi.iter().sum();
        pi.iter_mut().for_each(|p| *p /= total);
        Ok(pi)
    }
}

/// M/M/c mean waiting time from a CTMC truncated at `max_jobs` in system.
pub fn mmc_wq_ctmc(lambda: f64, mu: f64, c: usize, max_jobs: usize) -> Result<f64> {
    check_rates(lambda, mu)?;
    let mut chain = Ctmc::new(max_jobs + 1);
    for k in 0..=max_jobs {
        if k < max_jobs {
            chain.add(k, k + 1, lambda);
        }
        if k > 0 {
            chain.add(k, k - 1, k.min(c) as f64 * mu);
        }
    }
    let pi = chain.steady_state()?;
    let lq: f64 = pi.iter().enumerate().map(|(k, p)| k.saturating_sub(c) as f64 * p).sum();
    let accepted = lambda * (1.0 - pi[max_jobs]);
    Ok(lq / accepted)
}

/// Two-class preemptive-resume M/M/1 response times `(W1, W2)` from a CTMC
/// truncated at `max1` class-1 and `max2` class-2 jobs.
pub fn preemptive_resume_ctmc(
    lambda1: f64,
    lambda2: f64,
    mu: f64,
    max1: usize,
    max2: usize,
) -> Result<(f64, f64)> {
    check_rates(lambda1, mu)?;
    check_rates(lambda2, mu)?;
    let stride = max1 + 1;
    let state = |n1: usize, n2: usize| n2 * stride + n1;
    let mut chain = Ctmc::new(stride * (max2 + 1));
    for n2 in 0..=max2 {
        for n1 in 0..=max1 {
            let s = state(n1, n2);
            if n1 < max1 {
                chain.add(s, state(n1 + 1, n2), lambda1);
            }
            if n2 < max2 {
                chain.add(s, state(n1, n2 + 1), lambda2);
            }
            if n1 > 0 {
                chain.add(s, state(n1 - 1, n2), mu);
            } else if n2 > 0 {
                chain.add(s, state(n1, n2 - 1), mu);
            }
        }
    }
    let pi = chain.steady_state()?;
    let (mut l1, mut l2, mut full1, mut full2) = (0.0, 0.0, 0.0, 0.0);
    for n2 in 0..=max2 {
        for n1 in 0..=max1 {
            let p = pi[state(n1, n2)];
            l1 += n1 as f64 * p;
            l2 += n2 as f64 * p;
            if n1 == max1 {
                full1 += p;
            }
            if n2 == max2 {
                full2 += p;
            }
        }
    }
    Ok((l1 / (lambda1 * (1.0 - full1)), l2 / (lambda2 * (1.0 - full2))))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn mm1_values() {
        let r = mm1(6.0, 13.0).unwrap();
        assert!((r.w - 1.0 / 7.0).abs() < 1e-15);
        assert!((r.lq - 0.395_604_395_604_395_6).abs() < 1e-12);
        assert!((r.w - r.wq - 1.0 / 13.0).abs() < 1e-15);
        assert!((r.l - 6.0 * r.w).abs() < 1e-15);
        assert!(mm1(13.0, 13.0).is_err());
        let tiny = mm1(1e-12, 13.0).unwrap();
        assert!(rel(tiny.w, 1.0 / 13.0) < 1e-9);
    }

    #[test]
    fn mm1n_values() {
        assert!((mm1n_loss(13.0, 13.0, 20).unwrap() - 1.0 / 21.0).abs() < 1e-15);
        let rho: f64 = 6.0 / 13.0;
        let expect = (7.0 / 13.0) * rho.powi(21) / (1.0 - rho.powi(22));
        let got = mm1n_loss(6.0, 13.0, 21).unwrap();
        assert!(rel(got, expect) < 1e-12);
        assert!((got - 4.781_020e-8).abs() < 1e-13, "{got}");
        assert!(mm1n_loss(6.0, 13.0, 2000).unwrap() < 1e-300);
    }

    #[test]
    fn mm1n_matches_ctmc() {
        let (lambda, mu, n) = (12.0, 13.0, 8usize);
        let mut chain = Ctmc::new(n + 1);
        for k in 0..n {
            chain.add(k, k + 1, lambda);
            chain.add(k + 1, k, mu);
        }
        let pi = chain.steady_state().unwrap();
        assert!(rel(mm1n_loss(lambda, mu, n).unwrap(), pi[n]) < 1e-12);
    }

    #[test]
    fn erlang_c_reduces_to_mm1() {
        for (l, m) in [(6.0, 13.0), (12.0, 13.0), (0.5, 2.0)] {
            let ec = erlang_c_wq(l, m, 1).unwrap();
            assert!((ec - mm1(l, m).unwrap().wq).abs() < 1e-12);
        }
        assert!(erlang_c_wq(1e-9, 13.0, 3).unwrap() < 1e-20);
        assert!(erlang_c_wq(39.0, 13.0, 3).is_err());
    }

    #[test]
    fn erlang_c_matches_ctmc() {
        for (l, m, c) in [(6.0, 13.0, 3), (12.0, 13.0, 3), (30.0, 13.0, 3), (20.0, 4.0, 7)] {
            let closed = erlang_c_wq(l, m, c).unwrap();
            let brute = mmc_wq_ctmc(l, m, c, 2000).unwrap();
            assert!(rel(closed, brute) < 1e-9, "{l} {m} {c}: {closed} vs {brute}");
        }
    }

    #[test]
    fn preemptive_resume_reductions() {
        let (_, w2) = mm1_preemptive_resume(0.0, 6.0, 13.0).unwrap();
        assert!((w2 - 1.0 / 7.0).abs() < 1e-15);
        let (w1, _) = mm1_preemptive_resume(3.0, 1e-12, 13.0).unwrap();
        assert!((w1 - 0.1).abs() < 1e-15);
        let (w1b, _) = mm1_preemptive_resume(3.0, 6.0, 13.0).unwrap();
        assert_eq!(w1, w1b);
        assert!(mm1_preemptive_resume(7.0, 6.0, 13.0).is_err());
    }

    #[test]
    fn preemptive_resume_matches_ctmc_grid() {
        for (l1, l2) in [(3.0, 6.0), (1.0, 1.0), (5.0, 6.0), (3.0, 1.0), (1.0, 9.0)] {
            let (w1, w2) = mm1_preemptive_resume(l1, l2, 13.0).unwrap();
            let (c1, c2) = preemptive_resume_ctmc(l1, l2, 13.0, 60, 400).unwrap();
            assert!(rel(w1, c1) < 1e-3, "W1 {l1},{l2}: {w1} vs {c1}");
            assert!(rel(w2, c2) < 1e-3, "W2 {l1},{l2}: {w2} vs {c2}");
        }
    }

    #[test]
    fn ctmc_two_state() {
        let mut c = Ctmc::new(2);
        c.add(0, 1, 1.0);
        c.add(1, 0, 3.0);
        let pi = c.steady_state().unwrap();
        assert!((pi[0] - 0.75).abs() < 1e-15 && (pi[1] - 0.25).abs() < 1e-15);
    }
}
