//! Shared helpers: feature-switched parallel map and grid construction.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `items`, in parallel when the `parallel` feature is enabled.
///
/// Results are returned in input order either way, so callers see identical
/// output regardless of the feature flag or thread count.
#[cfg(feature = "parallel")]
pub fn par_map<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    items.into_par_iter().map(f).collect()
}

/// Sequential fallback with the same signature.
#[cfg(not(feature = "parallel"))]
pub fn par_map<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    items.into_iter().map(f).collect()
}

/// `n` evenly spaced points on `[a, b]`, endpoints included.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2, "linspace needs at least two points");
    let step = (b - a) / (n - 1) as f64;
    (0..n).map(|i| a + step * i as f64).collect()
}

/// `n` logarithmically spaced points on `[a, b]` (both > 0), endpoints included.
pub fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(a > 0.0 && b > 0.0, "logspace needs positive endpoints");
    linspace(a.ln(), b.ln(), n).into_iter().map(f64::exp).collect()
}

/// Grid specification: `lin:START:STOP:N` or `log:START:STOP:N`
/// (a bare `START:STOP:N` means linear).
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = spec.split(':').collect();
    let (kind, rest) = match parts.as_slice() {
        [k @ ("lin" | "log"), rest @ ..] => (*k, rest),
        rest @ [_, _, _] => ("lin", rest),
        _ => return Err(format!("bad grid spec {spec:?}: want [lin|log:]START:STOP:N")),
    };
    if rest.len() != 3 {
        return Err(format!("bad grid spec {spec:?}: want [lin|log:]START:STOP:N"));
    }
    let a: f64 = rest[0].parse().map_err(|e| format!("bad grid start: {e}"))?;
    let b: f64 = rest[1].parse().map_err(|e| format!("bad grid stop: {e}"))?;
    let n: usize = rest[2].parse().map_err(|e| format!("bad grid count: {e}"))?;
    if n < 2 {
        return Err("grid needs at least two points".into());
    }
    if kind == "log" {
        if a <= 0.0 || b <= 0.0 {
            return Err("log grid needs positive endpoints".into());
        }
        Ok(logspace(a, b, n))
    } else {
        Ok(linspace(a, b, n))
    }
}
