use super::NumericsError;

/// Composite Simpson rule on `[a, b]` with an even number of panels.
/// `b < a` integrates with reversed orientation.
pub fn simpson(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    panels: usize,
) -> Result<f64, NumericsError> {
    if panels < 2 || panels % 2 != 0 {
        return Err(NumericsError::Panels(panels));
    }
    if a == b {
        return Ok(0.0);
    }
    let h = (b - a) / panels as f64;
    let mut sample = |x: f64| {
        let y = f(x);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(NumericsError::NonFinite("quadrature sample"))
        }
    };
    let mut odd = 0.0;
    let mut even = 0.0;
    for k in 1..panels {
        let y = sample(a + k as f64 * h)?;
        if k % 2 == 1 {
            odd += y;
        } else {
            even += y;
        }
    }
    let ends = sample(a)? + sample(b)?;
    Ok(h / 3.0 * (ends + 4.0 * odd + 2.0 * even))
}

/// One classical Runge–Kutta step of `ẋ = rhs(x)`.
pub fn rk4_step<E: From<NumericsError>>(
    state: &[f64],
    mut rhs: impl FnMut(&[f64]) -> Result<Vec<f64>, E>,
    h: f64,
) -> Result<Vec<f64>, E> {
    let mut eval = |x: &[f64]| -> Result<Vec<f64>, E> {
        let d = rhs(x)?;
        if d.iter().all(|v| v.is_finite()) {
            Ok(d)
        } else {
            Err(NumericsError::NonFinite("ode right-hand side").into())
        }
    };
    let shift =
        |k: &[f64], c: f64| -> Vec<f64> { state.iter().zip(k).map(|(x, d)| x + c * d).collect() };
    let k1 = eval(state)?;
    let k2 = eval(&shift(&k1, h / 2.0))?;
    let k3 = eval(&shift(&k2, h / 2.0))?;
    let k4 = eval(&shift(&k3, h))?;
    Ok((0..state.len())
        .map(|i| state[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}
