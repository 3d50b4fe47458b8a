//! Stationary solve of the joint chain.
//!
//! The joint chain need not be irreducible; it has a unique closed
//! communicating class, located through the smaller-median pair
//! `(M', M'')` and confirmed by an SCC pass over the positive-rate
//! digraph. On that class the stationary law is computed by banded GTH
//! (state-reduction) elimination, which uses only additions,
//! multiplications and divisions of nonnegative numbers and therefore
//! delivers componentwise accuracy; the same elimination in exact
//! rational arithmetic is available below a configurable state count
//! for cross-validation.

use num_rational::BigRational;
use num_traits::Zero;

use crate::error::Error;
use crate::numeric::{ratio_to_f64, Accumulator};
use crate::Result;

use super::joint::{JointChainRates, DIRECTIONS};

/// Stationary distribution of the joint chain restricted to its unique
/// closed class, with quality metrics and cached functionals.
#[derive(Debug, Clone)]
pub struct StationaryCoupling {
    pub nx: usize,
    pub ny: usize,
    /// Grid indices (`u * ny + v`) of the closed class, ascending.
    pub class: Vec<usize>,
    /// Stationary mass per class state (sums to one).
    pub gamma: Vec<f64>,
    /// Exact stationary masses when the exact solve ran.
    pub exact_gamma: Option<Vec<BigRational>>,
    /// Max-norm residual of the balance equations, on rates scaled so
    /// the largest total outflow is one.
    pub residual: f64,
    /// Max atomwise deviation of the two marginals from the input laws.
    pub marginal_error: f64,
    /// `H = X - Y` per class state.
    pub h_values: Vec<f64>,
    /// `Q = |T_Y(Y) - T_X(X)|` per class state.
    pub q_values: Vec<f64>,
    /// Atom positions of the two supports.
    pub x_pos: Vec<f64>,
    pub y_pos: Vec<f64>,
}

impl StationaryCoupling {
    pub fn p_h_zero(&self) -> f64 {
        self.gamma
            .iter()
            .zip(&self.h_values)
            .filter(|(_, h)| h.abs() < 1e-9)
            .map(|(g, _)| g)
            .sum()
    }

    /// `P(|H| >= t)`.
    pub fn p_abs_h_ge(&self, t: f64) -> f64 {
        self.gamma
            .iter()
            .zip(&self.h_values)
            .filter(|(_, h)| h.abs() >= t - 1e-12)
            .map(|(g, _)| g)
            .sum()
    }

    /// `E[f(H, Q)]` with compensated summation.
    pub fn expect(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        let mut acc = Accumulator::new();
        for ((g, h), q) in self.gamma.iter().zip(&self.h_values).zip(&self.q_values) {
            acc.add(g * f(*h, *q));
        }
        acc.value()
    }
}

/// Iterative Tarjan SCC over the positive-rate digraph.
fn strongly_connected_components(rates: &JointChainRates) -> Vec<Vec<usize>> {
    let n = rates.states();
    let ny = rates.ny as i64;
    let neighbor = |state: usize, dir: super::joint::Dir| -> Option<usize> {
        let u = (state / rates.ny) as i64;
        let v = (state % rates.ny) as i64;
        let (du, dv) = dir.delta();
        let (nu, nv) = (u + du, v + dv);
        if nu < 0 || nv < 0 || nu >= rates.nx as i64 || nv >= ny {
            return None;
        }
        Some((nu * ny + nv) as usize)
    };

    let mut index = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut next_index = 0usize;
    let mut comps: Vec<Vec<usize>> = Vec::new();

    // Explicit DFS frames: (state, next direction to try).
    let mut frames: Vec<(usize, usize)> = Vec::new();
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        frames.push((root, 0));
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;
        while !frames.is_empty() {
            let (state, di) = {
                let top = frames.last_mut().unwrap();
                let r = *top;
                top.1 += 1;
                r
            };
            if di < 6 {
                let dir = DIRECTIONS[di];
                let u = state / rates.ny;
                let v = state % rates.ny;
                if rates.rate(u, v, dir) > 0.0 {
                    if let Some(next) = neighbor(state, dir) {
                        if index[next] == usize::MAX {
                            index[next] = next_index;
                            low[next] = next_index;
                            next_index += 1;
                            stack.push(next);
                            on_stack[next] = true;
                            frames.push((next, 0));
                        } else if on_stack[next] {
                            low[state] = low[state].min(index[next]);
                        }
                    }
                }
            } else {
                frames.pop();
                if let Some(&(parent, _)) = frames.last() {
                    low[parent] = low[parent].min(low[state]);
                }
                if low[state] == index[state] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().unwrap();
                        on_stack[w] = false;
                        comp.push(w);
                        if w == state {
                            break;
                        }
                    }
                    comps.push(comp);
                }
            }
        }
    }
    comps
}

/// Locate the unique closed class; errors if zero or several are closed,
/// or if the median state sits outside it.
pub fn find_recurrent_class(rates: &JointChainRates) -> Result<Vec<usize>> {
    let comps = strongly_connected_components(rates);
    let mut comp_of = vec![usize::MAX; rates.states()];
    for (ci, comp) in comps.iter().enumerate() {
        for &s in comp {
            comp_of[s] = ci;
        }
    }
    let ny = rates.ny as i64;
    let mut closed: Vec<usize> = Vec::new();
    for (ci, comp) in comps.iter().enumerate() {
        let mut is_closed = true;
        'outer: for &s in comp {
            let u = s / rates.ny;
            let v = s % rates.ny;
            for dir in DIRECTIONS {
                if rates.rate(u, v, dir) <= 0.0 {
                    continue;
                }
                let (du, dv) = dir.delta();
                let (nu, nv) = (u as i64 + du, v as i64 + dv);
                if nu < 0 || nv < 0 || nu >= rates.nx as i64 || nv >= ny {
                    continue;
                }
                let t = (nu * ny + nv) as usize;
                if comp_of[t] != ci {
                    is_closed = false;
                    break 'outer;
                }
            }
        }
        if is_closed {
            closed.push(ci);
        }
    }
    if closed.len() != 1 {
        return Err(Error::ModelViolation(format!(
            "expected a unique closed class, found {}",
            closed.len()
        )));
    }
    // Smaller medians of both supports.
    let median_state = ((rates.nx - 1) / 2) * rates.ny + (rates.ny - 1) / 2;
    if comp_of[median_state] != closed[0] {
        return Err(Error::ModelViolation(
            "median state is not in the closed class".into(),
        ));
    }
    let mut class = comps[closed[0]].clone();
    class.sort_unstable();
    Ok(class)
}

/// Banded GTH elimination in doubles over the class.
fn gth_banded_f64(rates: &JointChainRates, class: &[usize]) -> Result<Vec<f64>> {
    let nc = class.len();
    let mut pos = vec![usize::MAX; rates.states()];
    for (r, &s) in class.iter().enumerate() {
        pos[s] = r;
    }
    // Bandwidth after renumbering.
    let mut bw = 1usize;
    let ny = rates.ny as i64;
    let edges = |s: usize| -> Vec<(usize, f64)> {
        let u = s / rates.ny;
        let v = s % rates.ny;
        let mut out = Vec::with_capacity(6);
        for dir in DIRECTIONS {
            let rate = rates.rate(u, v, dir);
            if rate <= 0.0 {
                continue;
            }
            let (du, dv) = dir.delta();
            let (nu, nv) = (u as i64 + du, v as i64 + dv);
            if nu < 0 || nv < 0 || nu >= rates.nx as i64 || nv >= ny {
                continue;
            }
            out.push(((nu * ny + nv) as usize, rate));
        }
        out
    };
    for (r, &s) in class.iter().enumerate() {
        for (t, _) in edges(s) {
            let c = pos[t];
            if c == usize::MAX {
                return Err(Error::ModelViolation(
                    "rate leaves the recurrent class".into(),
                ));
            }
            bw = bw.max(r.abs_diff(c));
        }
    }
    let width = 2 * bw + 1;
    let mut band = vec![0.0f64; nc * width];
    {
        let at = |r: usize, c: usize| -> usize { r * width + (c + bw - r) };
        for (r, &s) in class.iter().enumerate() {
            for (t, rate) in edges(s) {
                let c = pos[t];
                let slot = at(r, c);
                band[slot] += rate;
            }
        }
    }
    let idx = |r: usize, c: usize| -> usize { r * width + (c + bw - r) };
    let mut s_out = vec![0.0f64; nc];
    for r in (1..nc).rev() {
        let lo = r.saturating_sub(bw);
        let mut s = 0.0;
        for c in lo..r {
            s += band[idx(r, c)];
        }
        if s <= 0.0 {
            return Err(Error::Internal(format!(
                "GTH pivot vanished at state {r}; class not irreducible?"
            )));
        }
        s_out[r] = s;
        for i in lo..r {
            let air = band[idx(i, r)];
            if air == 0.0 {
                continue;
            }
            let f = air / s;
            for c in lo..r {
                if c == i {
                    continue;
                }
                let arc = band[idx(r, c)];
                if arc != 0.0 {
                    band[idx(i, c)] += f * arc;
                }
            }
        }
    }
    let mut pi = vec![0.0f64; nc];
    pi[0] = 1.0;
    for r in 1..nc {
        let lo = r.saturating_sub(bw);
        let mut acc = Accumulator::new();
        for i in lo..r {
            let air = band[idx(i, r)];
            if air != 0.0 {
                acc.add(pi[i] * air);
            }
        }
        pi[r] = acc.value() / s_out[r];
    }
    let mut total = Accumulator::new();
    for &p in &pi {
        total.add(p);
    }
    let t = total.value();
    for p in &mut pi {
        *p /= t;
    }
    Ok(pi)
}

/// The same elimination in exact rational arithmetic.
fn gth_banded_exact(rates: &JointChainRates, class: &[usize]) -> Result<Vec<BigRational>> {
    let nc = class.len();
    let mut pos = vec![usize::MAX; rates.states()];
    for (r, &s) in class.iter().enumerate() {
        pos[s] = r;
    }
    let ny = rates.ny as i64;
    let mut bw = 1usize;
    let neighbors = |s: usize| -> Vec<(usize, BigRational)> {
        let u = s / rates.ny;
        let v = s % rates.ny;
        let mut out = Vec::with_capacity(6);
        for dir in DIRECTIONS {
            let rate = rates.rate_exact(u, v, dir);
            if rate <= BigRational::zero() {
                continue;
            }
            let (du, dv) = dir.delta();
            let (nu, nv) = (u as i64 + du, v as i64 + dv);
            if nu < 0 || nv < 0 || nu >= rates.nx as i64 || nv >= ny {
                continue;
            }
            out.push(((nu * ny + nv) as usize, rate));
        }
        out
    };
    for (r, &s) in class.iter().enumerate() {
        for (t, _) in neighbors(s) {
            bw = bw.max(r.abs_diff(pos[t]));
        }
    }
    let width = 2 * bw + 1;
    let mut band = vec![BigRational::zero(); nc * width];
    let idx = |r: usize, c: usize| -> usize { r * width + (c + bw - r) };
    for (r, &s) in class.iter().enumerate() {
        for (t, rate) in neighbors(s) {
            let slot = idx(r, pos[t]);
            band[slot] += rate;
        }
    }
    let mut s_out = vec![BigRational::zero(); nc];
    for r in (1..nc).rev() {
        let lo = r.saturating_sub(bw);
        let mut s = BigRational::zero();
        for c in lo..r {
            s += &band[idx(r, c)];
        }
        if s.is_zero() {
            return Err(Error::Internal("exact GTH pivot vanished".into()));
        }
        for i in lo..r {
            let air = band[idx(i, r)].clone();
            if air.is_zero() {
                continue;
            }
            let f = air / &s;
            for c in lo..r {
                if c == i {
                    continue;
                }
                let arc = band[idx(r, c)].clone();
                if !arc.is_zero() {
                    band[idx(i, c)] += &f * arc;
                }
            }
        }
        s_out[r] = s;
    }
    let mut pi = vec![BigRational::zero(); nc];
    pi[0] = BigRational::from_integer(1.into());
    for r in 1..nc {
        let lo = r.saturating_sub(bw);
        let mut acc = BigRational::zero();
        for i in lo..r {
            let air = &band[idx(i, r)];
            if !air.is_zero() {
                acc += &pi[i] * air;
            }
        }
        pi[r] = acc / &s_out[r];
    }
    let total: BigRational = pi.iter().sum();
    Ok(pi.into_iter().map(|p| p / &total).collect())
}

/// Solve for the stationary coupling. `exact_limit` bounds the class
/// size for which the exact-rational cross-validation solve also runs.
pub fn solve_stationary(rates: &JointChainRates, exact_limit: usize) -> Result<StationaryCoupling> {
    let class = find_recurrent_class(rates)?;
    let gamma = gth_banded_f64(rates, &class)?;

    // Residual of the balance equations on uniformized rates.
    let ny = rates.ny as i64;
    let mut pos = vec![usize::MAX; rates.states()];
    for (r, &s) in class.iter().enumerate() {
        pos[s] = r;
    }
    let mut lambda_max: f64 = 0.0;
    let mut outflow = vec![0.0f64; class.len()];
    for (r, &s) in class.iter().enumerate() {
        let u = s / rates.ny;
        let v = s % rates.ny;
        let mut total = 0.0;
        for dir in DIRECTIONS {
            total += rates.rate(u, v, dir);
        }
        outflow[r] = total;
        lambda_max = lambda_max.max(total);
    }
    let mut inflow: Vec<Accumulator> = vec![Accumulator::new(); class.len()];
    for (r, &s) in class.iter().enumerate() {
        let u = s / rates.ny;
        let v = s % rates.ny;
        for dir in DIRECTIONS {
            let rate = rates.rate(u, v, dir);
            if rate <= 0.0 {
                continue;
            }
            let (du, dv) = dir.delta();
            let t = ((u as i64 + du) * ny + (v as i64 + dv)) as usize;
            inflow[pos[t]].add(gamma[r] * rate);
        }
    }
    let mut residual: f64 = 0.0;
    for r in 0..class.len() {
        let res = (inflow[r].value() - gamma[r] * outflow[r]).abs() / lambda_max;
        residual = residual.max(res);
    }

    // Marginals against the exact input laws.
    let mut mx = vec![0.0f64; rates.nx];
    let mut my = vec![0.0f64; rates.ny];
    for (r, &s) in class.iter().enumerate() {
        mx[s / rates.ny] += gamma[r];
        my[s % rates.ny] += gamma[r];
    }
    let mut marginal_error: f64 = 0.0;
    for (u, m) in mx.iter().enumerate() {
        marginal_error = marginal_error.max((m - ratio_to_f64(&rates.x_masses[u])).abs());
    }
    for (v, m) in my.iter().enumerate() {
        marginal_error = marginal_error.max((m - ratio_to_f64(&rates.y_masses[v])).abs());
    }

    if residual > 1e-10 {
        return Err(Error::Internal(format!("balance residual {residual} above 1e-10")));
    }
    if marginal_error > 1e-9 {
        return Err(Error::Internal(format!(
            "marginal error {marginal_error} above 1e-9"
        )));
    }

    let exact_gamma = if class.len() <= exact_limit {
        Some(gth_banded_exact(rates, &class)?)
    } else {
        None
    };

    let h_values: Vec<f64> = class
        .iter()
        .map(|&s| rates.x_pos[s / rates.ny] - rates.y_pos[s % rates.ny])
        .collect();
    let q_values: Vec<f64> = class
        .iter()
        .map(|&s| rates.q(s / rates.ny, s % rates.ny))
        .collect();

    Ok(StationaryCoupling {
        nx: rates.nx,
        ny: rates.ny,
        class,
        gamma,
        exact_gamma,
        residual,
        marginal_error,
        h_values,
        q_values,
        x_pos: rates.x_pos.clone(),
        y_pos: rates.y_pos.clone(),
    })
}

/// The three moment bounds on `H` under a solved coupling, at a given
/// `(theta, a, delta, mu)`.
#[derive(Debug, Clone)]
pub struct FunctionalReport {
    pub theta: f64,
    pub a: u64,
    pub delta: f64,
    pub mu: f64,
    pub p_tail: f64,
    pub tail_rhs: f64,
    pub exp_abs_h: f64,
    pub expectation_rhs: f64,
    pub exponential_rhs: f64,
    pub tail_margin: f64,
    pub expectation_margin: f64,
    pub exponential_margin: f64,
}

impl FunctionalReport {
    pub fn pass(&self) -> bool {
        self.tail_margin >= -1e-12
            && self.expectation_margin >= -1e-12
            && self.exponential_margin >= -1e-12
    }
}

/// Evaluate and check the tail, expectation and exponential bounds.
pub fn coupling_functionals(
    sc: &StationaryCoupling,
    theta: f64,
    a: u64,
    delta: f64,
    mu: f64,
) -> Result<FunctionalReport> {
    if theta < 0.0 {
        return Err(Error::invalid("theta must be nonnegative"));
    }
    if !(0.0 < delta && delta < 1.0) || mu <= 0.0 {
        return Err(Error::invalid("need delta in (0,1) and mu > 0"));
    }
    let af = a as f64;
    let p_tail = sc.p_abs_h_ge(af + 1.0);
    let e_q_minus_a = sc.expect(|_, q| (q - af).max(0.0));
    let tail_rhs = e_q_minus_a / (af + 1.0);

    let exp_abs_h = sc.expect(|h, _| (theta * h.abs()).exp());
    let expectation_rhs = 1.0 + sc.expect(|_, q| q * ((theta * q).exp() - 1.0));

    let coef = theta.exp() * theta * theta / (2.0 * (1.0 - delta));
    let exp_q = sc.expect(|_, q| (coef * q).exp());
    let exponential_rhs = (mu.exp() + (1.0 - delta) / (mu * delta * std::f64::consts::E)) * exp_q;

    Ok(FunctionalReport {
        theta,
        a,
        delta,
        mu,
        p_tail,
        tail_rhs,
        exp_abs_h,
        expectation_rhs,
        exponential_rhs,
        tail_margin: tail_rhs - p_tail,
        expectation_margin: expectation_rhs - exp_abs_h,
        exponential_margin: exponential_rhs - exp_abs_h,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact_dist::{centered_binomial, perturb_scale, walk_pmf};
    use crate::numeric::ratio;
    use crate::stein_markov::joint::build_joint_chain;
    use crate::stein_markov::stein::{stein_from_pmf, stein_scale_perturb};

    fn binomial_self_coupling(n: u64) -> StationaryCoupling {
        let p = centered_binomial(n, &ratio(1, 2)).unwrap();
        let t = stein_from_pmf(&p).unwrap();
        let jc = build_joint_chain(&t, &p, &t, &p).unwrap();
        solve_stationary(&jc, 600).unwrap()
    }

    #[test]
    fn identical_chains_concentrate_on_diagonal() {
        let sc = binomial_self_coupling(6);
        assert!(sc.p_h_zero() >= 1.0 - 1e-12);
        assert!(sc.residual <= 1e-10);
        assert!(sc.marginal_error <= 1e-9);
        // The diagonal stationary law is the marginal law itself.
        let p = centered_binomial(6, &ratio(1, 2)).unwrap();
        for (r, &s) in sc.class.iter().enumerate() {
            let u = s / sc.ny;
            let v = s % sc.ny;
            assert_eq!(u, v);
            let expect = ratio_to_f64(p.mass(u));
            assert!((sc.gamma[r] - expect).abs() < 1e-12);
        }
    }

    fn scaled_pair_coupling(n: u64, exact_limit: usize) -> StationaryCoupling {
        // X = Ŝ_{4n}, Y = 2 Ŝ_n + R.
        let x = walk_pmf(4 * n).unwrap();
        let tx = stein_from_pmf(&x).unwrap();
        let base = walk_pmf(n).unwrap();
        let tb = stein_from_pmf(&base).unwrap();
        let y = perturb_scale(&base);
        let ty = stein_scale_perturb(&tb, &base).unwrap();
        let jc = build_joint_chain(&tx, &x, &ty, &y).unwrap();
        solve_stationary(&jc, exact_limit).unwrap()
    }

    #[test]
    fn exact_solve_cross_validates_float_solve() {
        let sc = scaled_pair_coupling(2, 10_000);
        let exact = sc.exact_gamma.as_ref().expect("exact solve requested");
        assert_eq!(exact.len(), sc.gamma.len());
        let total: BigRational = exact.iter().sum();
        assert_eq!(total, BigRational::from_integer(1.into()));
        for (g, e) in sc.gamma.iter().zip(exact) {
            assert!((g - ratio_to_f64(e)).abs() < 1e-12);
        }
    }

    #[test]
    fn stationarity_identity_with_indicator_test_function() {
        // With psi(x) = 1_{x >= 0}: E[(Q - |H|)_+ ; H = 0] = 2 E[H_+].
        for sc in [scaled_pair_coupling(2, 0), scaled_pair_coupling(4, 0)] {
            let lhs = sc.expect(|h, q| if h.abs() < 1e-9 { (q - h.abs()).max(0.0) } else { 0.0 });
            let rhs = 2.0 * sc.expect(|h, _| h.max(0.0));
            assert!((lhs - rhs).abs() < 1e-10, "lhs={lhs} rhs={rhs}");
        }
    }

    #[test]
    fn functional_bounds_hold() {
        let sc = scaled_pair_coupling(4, 0);
        for theta in [0.0, 0.1, 0.25] {
            let fr = coupling_functionals(&sc, theta, 1, 0.5, 0.5).unwrap();
            assert!(fr.pass(), "theta={theta}: {fr:?}");
            if theta == 0.0 {
                assert!((fr.exp_abs_h - 1.0).abs() < 1e-12);
            }
        }
        // Q ≡ 0 chain: identical marginals give E[e^{theta |H|}] = 1.
        let sc = binomial_self_coupling(4);
        let fr = coupling_functionals(&sc, 0.3, 0, 0.5, 0.5).unwrap();
        assert!((fr.exp_abs_h - 1.0).abs() < 1e-12);
        assert!(fr.pass());
    }
}
