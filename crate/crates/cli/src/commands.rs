use boxpart::asym::{
    estimate_difference, estimate_theorem1, estimate_theorem1prime, fair_coin_rate, moments,
    pak_panova_bound, takacs_estimate, tilted_rate, Estimate,
};
use boxpart::exact::{coeff_vector_with_cap, coeff_with_cap, kronecker_diff, ln_big, BoxSpec};
use boxpart::lclt::{lclt_report, GeometricFamily};
use boxpart::params::{
    delta, discrete_residuals, jacobian, psi, solve_discrete_tilt, solve_tilt, AspectFill,
};
use boxpart::sampler::{default_max_tries, sample_boxed_batch};
use boxpart::shape::{boundary_distance, hausdorff_distance, limit_curve, petrov_endpoints};
use boxpart::{Error, Result};
use serde_json::Value;

use crate::report::{num, Report};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Method {
    T1,
    T1p,
    Takacs,
    Diff,
    PpBound,
}

impl Method {
    fn name(self) -> &'static str {
        match self {
            Method::T1 => "t1",
            Method::T1p => "t1p",
            Method::Takacs => "takacs",
            Method::Diff => "diff",
            Method::PpBound => "pp-bound",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Family {
    Tilted,
    Fair,
}

fn big(x: &num_bigint::BigUint) -> Value {
    Value::String(x.to_string())
}

fn box_inputs(r: &mut Report, m: u64, l: u64, n: Option<u64>) {
    r.input("m", m).input("l", l);
    if let Some(n) = n {
        r.input("n", n);
    }
}

/// A solver residual above `max_residual` is reported as non-convergence.
fn check_residual(op: &'static str, residual: f64, max_residual: f64) -> Result<()> {
    if residual.is_finite() && residual <= max_residual {
        Ok(())
    } else {
        Err(Error::NonConvergence {
            op,
            iterations: 0,
            residual,
        })
    }
}

pub fn exact(m: u64, l: u64, n: Option<u64>, cap: u64) -> Result<Report> {
    let mut r;
    match n {
        Some(n) => {
            let spec = BoxSpec::new(m, l, n)?;
            r = Report::new(&["m", "l", "n", "count"]);
            r.row(vec![
                m.into(),
                l.into(),
                n.into(),
                big(&coeff_with_cap(spec, cap)?),
            ]);
        }
        None => {
            let v = coeff_vector_with_cap(m, l, cap)?;
            r = Report::with_columns((0..v.coeffs.len()).map(|k| format!("n{k}")).collect());
            r.row(v.coeffs.iter().map(big).collect());
            r.diagnostic("total", big(&v.total()));
        }
    }
    box_inputs(&mut r, m, l, n);
    r.input("cap", cap);
    Ok(r)
}

pub fn diff(m: u64, l: u64, n: u64) -> Result<Report> {
    let spec = BoxSpec::new(m, l, n)?;
    let d = kronecker_diff(spec)?;
    let mut r = Report::new(&["m", "l", "n", "difference", "log_difference"]);
    box_inputs(&mut r, m, l, Some(n));
    r.row(vec![m.into(), l.into(), n.into(), big(&d), num(ln_big(&d))]);
    r.diagnostic("pak_panova_bound", num(pak_panova_bound(m, l, n + 1)));
    Ok(r)
}

pub fn solve(a: f64, b: f64, max_residual: f64) -> Result<Report> {
    let regime = AspectFill::new(a, b)?;
    let t = solve_tilt(&regime)?;
    let back = psi(t)?;
    let (ra, rb) = (back.a - regime.a, back.b - regime.b);
    check_residual("solve", ra.abs().max(rb.abs()), max_residual)?;
    let j = jacobian(t)?;
    let (e1, e2) = j.eigenvalues();
    let mut r = Report::new(&["A", "B", "c", "d", "delta", "residual_A", "residual_B"]);
    r.input("A", num(a))
        .input("B", num(b))
        .input("max_residual", num(max_residual));
    r.row(vec![
        num(a),
        num(b),
        num(t.c),
        num(t.d),
        num(delta(t)?),
        num(ra),
        num(rb),
    ]);
    r.diagnostic("reflected", regime.reflected)
        .diagnostic("jacobian_eigenvalue_min", num(e1))
        .diagnostic("jacobian_eigenvalue_max", num(e2));
    Ok(r)
}

pub fn solve_discrete(m: u64, l: u64, n: u64, max_residual: f64) -> Result<Report> {
    let t = solve_discrete_tilt(m, l, n)?;
    let (rs, rt) = discrete_residuals(m, l, n, t.c, t.d);
    check_residual(
        "solve-discrete",
        (rs / l as f64).abs().max((rt / n as f64).abs()),
        max_residual,
    )?;
    let mo = moments(&t)?;
    let mut r = Report::new(&[
        "m",
        "l",
        "n",
        "c_m",
        "d_m",
        "mu",
        "nu",
        "alpha",
        "beta",
        "gamma",
        "delta_m",
        "log_norm",
        "residual_S",
        "residual_T",
    ]);
    box_inputs(&mut r, m, l, Some(n));
    r.input("max_residual", num(max_residual));
    r.row(vec![
        m.into(),
        l.into(),
        n.into(),
        num(t.c),
        num(t.d),
        num(mo.mu),
        num(mo.nu),
        num(mo.alpha),
        num(mo.beta),
        num(mo.gamma),
        num(mo.delta_m),
        num(mo.log_norm),
        num(rs),
        num(rt),
    ]);
    Ok(r)
}

fn run_estimate(method: Method, m: u64, l: u64, n: u64) -> Result<Estimate> {
    match method {
        Method::T1 => estimate_theorem1(m, l, n),
        Method::T1p => estimate_theorem1prime(m, l, n),
        Method::Takacs => takacs_estimate(m, l, n),
        Method::Diff => estimate_difference(m, l, n),
        Method::PpBound => {
            let v = pak_panova_bound(m, l, n);
            Ok(Estimate {
                log_value: v.ln(),
                value: v,
                exponential_rate: v.ln() / m as f64,
                regime_excluded: false,
                weak_tilt: false,
            })
        }
    }
}

pub fn estimate(m: u64, l: u64, n: u64, method: Method) -> Result<Report> {
    BoxSpec::new(m, l, n)?;
    let e = run_estimate(method, m, l, n)?;
    let mut r = Report::new(&["method", "m", "l", "n", "log_value", "value", "rate"]);
    box_inputs(&mut r, m, l, Some(n));
    r.input("method", method.name());
    r.row(vec![
        method.name().into(),
        m.into(),
        l.into(),
        n.into(),
        num(e.log_value),
        num(e.value),
        num(e.exponential_rate),
    ]);
    r.diagnostic("regime_excluded", e.regime_excluded)
        .diagnostic("weak_tilt", e.weak_tilt);
    Ok(r)
}

/// Values of `m` given as `start:end[:step]`, inclusive.
#[derive(Debug, Clone)]
pub struct MRange(pub Vec<u64>);

pub fn parse_range(s: &str) -> std::result::Result<MRange, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let nums: std::result::Result<Vec<u64>, _> =
        parts.iter().map(|p| p.trim().parse::<u64>()).collect();
    let nums = nums.map_err(|e| format!("bad range '{s}': {e}"))?;
    let (start, end, step) = match nums[..] {
        [a] => (a, a, 1),
        [a, b] => (a, b, 1),
        [a, b, c] => (a, b, c),
        _ => return Err(format!("bad range '{s}': expected start:end[:step]")),
    };
    if step == 0 || start == 0 || start > end {
        return Err(format!(
            "bad range '{s}': need 1 <= start <= end and step >= 1"
        ));
    }
    Ok(MRange((start..=end).step_by(step as usize).collect()))
}

/// Exact counts against every estimate along `ℓ = round(A·m)`, `n = round(B·m²)`.
pub fn compare(ms: &[u64], aspect: f64, fill: f64, cap: u64) -> Result<Report> {
    AspectFill::new(aspect, fill)?;
    let mut r = Report::new(&[
        "m",
        "l",
        "n",
        "exact_log",
        "t1_log",
        "t1p_log",
        "takacs_log",
        "t1_ratio",
        "t1_rate",
        "fair_coin_rate",
    ]);
    r.input("m_values", ms.to_vec())
        .input("A", num(aspect))
        .input("B", num(fill))
        .input("cap", cap);
    let rows: Vec<Result<Vec<Value>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = ms
            .iter()
            .map(|&m| scope.spawn(move || compare_row(m, aspect, fill, cap)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("compare worker panicked"))
            .collect()
    });
    for row in rows {
        r.row(row?);
    }
    r.diagnostic("fair_coin_rate_per_m", num(fair_coin_rate(aspect)))
        .diagnostic("tilted_rate_per_m", num(tilted_rate(aspect, fill)?));
    Ok(r)
}

fn compare_row(m: u64, aspect: f64, fill: f64, cap: u64) -> Result<Vec<Value>> {
    let mf = m as f64;
    let l = ((aspect * mf).round() as u64).max(1);
    let n = ((fill * mf * mf).round() as u64).clamp(1, m * l - 1);
    let spec = BoxSpec::new(m, l, n)?;
    let exact = match coeff_with_cap(spec, cap) {
        Ok(v) => Some(ln_big(&v)),
        Err(Error::CapExceeded { .. }) => None,
        Err(e) => return Err(e),
    };
    let t1 = estimate_theorem1(m, l, n)?.log_value;
    let t1p = estimate_theorem1prime(m, l, n)?.log_value;
    let tk = takacs_estimate(m, l, n)?.log_value;
    let opt = |x: Option<f64>| x.map(num).unwrap_or(Value::Null);
    Ok(vec![
        m.into(),
        l.into(),
        n.into(),
        opt(exact),
        num(t1),
        num(t1p),
        num(tk),
        opt(exact.map(|e| (e - t1).exp())),
        num(t1 / mf),
        num(tk / mf),
    ])
}

/// Exponential rates per unit `m` of the fair-coin and tilted estimates across `B ∈ (0, A/2]`.
pub fn rates(aspect: f64, points: usize) -> Result<Report> {
    if points == 0 {
        return Err(Error::Domain {
            op: "rates",
            detail: "points must be at least 1".into(),
        });
    }
    let mut r = Report::new(&["A", "B", "tilted_rate", "fair_coin_rate"]);
    r.input("A", num(aspect)).input("points", points);
    for k in 1..=points {
        let b = 0.5 * aspect * k as f64 / points as f64;
        r.row(vec![
            num(aspect),
            num(b),
            num(tilted_rate(aspect, b)?),
            num(fair_coin_rate(aspect)),
        ]);
    }
    Ok(r)
}

pub fn sample(
    m: u64,
    l: u64,
    n: u64,
    count: usize,
    seed: u64,
    max_tries: Option<u64>,
) -> Result<Report> {
    let tries = match max_tries {
        Some(t) => t,
        None => default_max_tries(m, l, n)?,
    };
    let samples = sample_boxed_batch(m, l, n, count, seed, tries)?;
    let curve = match AspectFill::from_box(m, l, n) {
        Ok(regime) => Some(limit_curve(&regime, boxpart::shape::DEFAULT_GRID)?),
        Err(Error::Degenerate { .. }) => None,
        Err(e) => return Err(e),
    };
    let mut r = Report::new(&[
        "index",
        "tries",
        "vertical_distance",
        "hausdorff_distance",
        "parts",
    ]);
    box_inputs(&mut r, m, l, Some(n));
    r.input("count", count)
        .input("seed", seed)
        .input("max_tries", tries);
    let mut total_tries = 0u64;
    for (i, s) in samples.iter().enumerate() {
        total_tries += s.tries;
        let (v, h) = match &curve {
            Some(c) => (
                num(boundary_distance(&s.partition, c)),
                num(hausdorff_distance(&s.partition, c)),
            ),
            None => (Value::Null, Value::Null),
        };
        let parts = s
            .partition
            .parts
            .iter()
            .map(u64::to_string)
            .collect::<Vec<_>>()
            .join(" ");
        r.row(vec![i.into(), s.tries.into(), v, h, parts.into()]);
    }
    if count > 0 {
        r.diagnostic("mean_tries", num(total_tries as f64 / count as f64));
    }
    Ok(r)
}

pub fn shape(a: f64, b: f64, grid: usize) -> Result<Report> {
    let regime = AspectFill::new(a, b)?;
    let curve = limit_curve(&regime, grid)?;
    let mut r = Report::new(&["x", "y"]);
    r.input("A", num(a)).input("B", num(b)).input("grid", grid);
    for (x, y) in curve.x.iter().zip(&curve.y) {
        r.row(vec![num(*x), num(*y)]);
    }
    r.diagnostic("c", num(curve.c))
        .diagnostic("d", num(curve.d));
    if !regime.is_central() {
        let e = petrov_endpoints(&regime)?;
        r.diagnostic("arc_s1", num(e.s1))
            .diagnostic("arc_s2", num(e.s2));
    }
    Ok(r)
}

pub fn lclt(m: usize, family: Family, aspect: f64, fill: f64) -> Result<Report> {
    let fam = match family {
        Family::Fair => GeometricFamily::fair(m),
        Family::Tilted => {
            let t = solve_tilt(&AspectFill::new(aspect, fill)?)?;
            GeometricFamily::tilted(&boxpart::params::DiscreteTilt {
                c: t.c,
                d: t.d,
                m: m as u64,
            })?
        }
    };
    let rep = lclt_report(&fam)?;
    let name = match family {
        Family::Fair => "fair",
        Family::Tilted => "tilted",
    };
    let mut r = Report::new(&[
        "m",
        "family",
        "sup_error",
        "diff_sup_error",
        "scaled_diff_error",
        "central_relative_error",
        "truncation_error",
    ]);
    r.input("m", m).input("family", name);
    if family == Family::Tilted {
        r.input("A", num(aspect)).input("B", num(fill));
    }
    r.row(vec![
        m.into(),
        name.into(),
        num(rep.sup_error),
        num(rep.diff_sup_error),
        num(rep.scaled_diff_error),
        num(rep.central_relative_error),
        num(rep.truncation_error),
    ]);
    Ok(r)
}
