use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PriorKind {
    /// Finitely many atoms with exact probabilities.
    Atoms,
    /// A density sampled on a grid with trapezoid weights.
    Grid,
}

/// A distribution on the real line represented as a weighted point set.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarPrior {
    kind: PriorKind,
    points: Vec<f64>,
    weights: Vec<f64>,
    ln_weights: Vec<f64>,
    mean: f64,
    second_moment: f64,
}

fn validate_points(points: &[f64], weights: &[f64]) -> Result<()> {
    if points.is_empty() {
        return Err(Error::Prior("empty support".into()));
    }
    if points.len() != weights.len() {
        return Err(Error::DimensionMismatch {
            what: "prior weights",
            expected: points.len(),
            got: weights.len(),
        });
    }
    if points.iter().any(|p| !p.is_finite()) {
        return Err(Error::Prior("non-finite support point".into()));
    }
    if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
        return Err(Error::Prior("weights must be finite and nonnegative".into()));
    }
    Ok(())
}

impl ScalarPrior {
    fn from_normalized(kind: PriorKind, points: Vec<f64>, weights: Vec<f64>) -> Self {
        let mean = points.iter().zip(&weights).map(|(p, w)| p * w).sum();
        let second_moment = points.iter().zip(&weights).map(|(p, w)| w * p * p).sum();
        let ln_weights = weights.iter().map(|w| w.ln()).collect();
        Self {
            kind,
            points,
            weights,
            ln_weights,
            mean,
            second_moment,
        }
    }

    /// Discrete prior; probabilities must sum to 1 within `1e-12`.
    pub fn atoms(values: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        validate_points(&values, &probs)?;
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Prior(format!("probabilities sum to {total}")));
        }
        let probs = probs.into_iter().map(|p| p / total).collect();
        Ok(Self::from_normalized(PriorKind::Atoms, values, probs))
    }

    /// Equiprobable `+1` / `-1`.
    pub fn rademacher() -> Self {
        Self::from_normalized(PriorKind::Atoms, vec![-1.0, 1.0], vec![0.5, 0.5])
    }

    /// Density values `density[i]` at increasing `abscissae[i]`, integrated
    /// with the trapezoid rule and renormalized.
    pub fn gridded(abscissae: Vec<f64>, density: &[f64]) -> Result<Self> {
        validate_points(&abscissae, density)?;
        if abscissae.len() < 2 {
            return Err(Error::Prior("a grid needs at least two points".into()));
        }
        if abscissae.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Prior("grid must be strictly increasing".into()));
        }
        let last = abscissae.len() - 1;
        let mut weights: Vec<f64> = (0..=last)
            .map(|i| {
                let left = if i > 0 { abscissae[i] - abscissae[i - 1] } else { 0.0 };
                let right = if i < last { abscissae[i + 1] - abscissae[i] } else { 0.0 };
                0.5 * (left + right) * density[i]
            })
            .collect();
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Prior("density integrates to zero".into()));
        }
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(Self::from_normalized(PriorKind::Grid, abscissae, weights))
    }

    /// `N(0, var)` on a 601-point grid spanning 12 standard deviations each side.
    pub fn gaussian(var: f64) -> Result<Self> {
        if !(var > 0.0) || !var.is_finite() {
            return Err(Error::domain("var", var, "(0, inf)"));
        }
        let sd = var.sqrt();
        let (xs, dens) = gaussian_grid(sd, 12.0, 601);
        Self::gridded(xs, &dens)
    }

    /// Zero with probability `1 - sparsity`, otherwise `N(0, spike_var)`.
    ///
    /// The slab is a 401-point trapezoid grid over 10 standard deviations each
    /// side; its center point carries the extra point mass at zero.
    pub fn bernoulli_gaussian(sparsity: f64, spike_var: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&sparsity) {
            return Err(Error::domain("sparsity", sparsity, "[0, 1]"));
        }
        if !(spike_var > 0.0) || !spike_var.is_finite() {
            return Err(Error::domain("spike_var", spike_var, "(0, inf)"));
        }
        let slab = Self::gridded_gaussian(spike_var.sqrt(), 10.0, 401)?;
        let zero = slab.points.len() / 2;
        let mut weights: Vec<f64> = slab.weights.iter().map(|w| w * sparsity).collect();
        weights[zero] += 1.0 - sparsity;
        let pts = slab.points;
        Ok(Self::from_normalized(PriorKind::Grid, pts, weights))
    }

    fn gridded_gaussian(sd: f64, span: f64, count: usize) -> Result<Self> {
        let (xs, dens) = gaussian_grid(sd, span, count);
        Self::gridded(xs, &dens)
    }

    pub fn kind(&self) -> PriorKind {
        self.kind
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub(crate) fn ln_weights(&self) -> &[f64] {
        &self.ln_weights
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// `E[theta^2]`.
    pub fn second_moment(&self) -> f64 {
        self.second_moment
    }

    pub fn variance(&self) -> f64 {
        self.second_moment - self.mean * self.mean
    }

    /// `max |theta|` over the support.
    pub fn support_radius(&self) -> f64 {
        self.points.iter().fold(0.0, |m, p| m.max(p.abs()))
    }

    /// Inverse-CDF draw from a uniform `u` in `[0, 1)`.
    pub fn sample_with(&self, u: f64) -> f64 {
        let mut acc = 0.0;
        for (p, w) in self.points.iter().zip(&self.weights) {
            acc += w;
            if u < acc {
                return *p;
            }
        }
        *self.points.last().expect("nonempty support")
    }
}

fn gaussian_grid(sd: f64, span: f64, count: usize) -> (Vec<f64>, Vec<f64>) {
    let half = (count / 2) as f64;
    let xs: Vec<f64> = (0..count).map(|i| sd * span * (i as f64 - half) / half).collect();
    let dens = xs.iter().map(|x| (-0.5 * (x / sd).powi(2)).exp()).collect();
    (xs, dens)
}
