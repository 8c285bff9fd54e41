//! Demand geometry of the unit linear market.
//!
//! Consumers are spread uniformly over `[0, 1]`. A consumer at `s` buying from
//! firm `i` pays `p_i + t|s - r_i|` and demands `1 - p_i - t|s - r_i|`. The
//! market boundary `r` is the indifferent consumer; firm 1 serves `[0, r]` and
//! firm 2 serves `[r, 1]`.

use serde::Serialize;

use crate::error::ModelError;
use crate::newton::{damped_newton, Mat2, NewtonSettings};

/// Below this `|t|` the boundary formula divides by (numerically) zero and the
/// subgame is replaced by aggregate demand `p = 1 - (q1 + q2)`.
pub const TRANSPORT_EPS: f64 = 1e-9;

/// Residual tolerance of the quantity-to-price inversion.
pub const INVERSION_TOL: f64 = 1e-12;

/// Firm index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Firm {
    One,
    Two,
}

impl Firm {
    pub const BOTH: [Firm; 2] = [Firm::One, Firm::Two];

    pub fn index(self) -> usize {
        match self {
            Firm::One => 0,
            Firm::Two => 1,
        }
    }

    pub fn rival(self) -> Firm {
        match self {
            Firm::One => Firm::Two,
            Firm::Two => Firm::One,
        }
    }
}

/// Firm locations and the transport rate. A negative `t` is a transport
/// allowance `u = -t` paid to travelling consumers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MarketConfig {
    r1: f64,
    r2: f64,
    t: f64,
}

impl MarketConfig {
    /// Requires `0 <= r1 <= 0.5 <= r2 <= 1`, `r1 < r2` and a finite `t`.
    pub fn new(r1: f64, r2: f64, t: f64) -> Result<Self, ModelError> {
        if !(r1.is_finite() && r2.is_finite() && t.is_finite()) {
            return Err(ModelError::InvalidConfig(
                "r1, r2 and t must be finite".into(),
            ));
        }
        if r1 >= r2 {
            return Err(ModelError::InvalidConfig(format!(
                "r1 = {r1}, r2 = {r2} violates r1 < r2"
            )));
        }
        if !(0.0..=0.5).contains(&r1) {
            return Err(ModelError::InvalidConfig(format!(
                "r1 = {r1} violates 0 <= r1 <= 0.5"
            )));
        }
        if !(0.5..=1.0).contains(&r2) {
            return Err(ModelError::InvalidConfig(format!(
                "r2 = {r2} violates 0.5 <= r2 <= 1"
            )));
        }
        Ok(Self { r1, r2, t })
    }

    pub fn r1(&self) -> f64 {
        self.r1
    }

    pub fn r2(&self) -> f64 {
        self.r2
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// Transport allowance `u = -t`.
    pub fn allowance(&self) -> f64 {
        -self.t
    }

    pub fn with_transport(&self, t: f64) -> Result<Self, ModelError> {
        Self::new(self.r1, self.r2, t)
    }

    /// Relabels the firms by reflecting the market: `(r1, r2) -> (1 - r2, 1 - r1)`.
    pub fn mirrored(&self) -> Self {
        Self {
            r1: 1.0 - self.r2,
            r2: 1.0 - self.r1,
            t: self.t,
        }
    }

    pub fn is_zero_transport(&self) -> bool {
        self.t.abs() < TRANSPORT_EPS
    }

    /// `r1 - (1 - r2)`: positive when firm 1 is nearer the centre.
    pub fn centrality(&self) -> f64 {
        self.r1 - (1.0 - self.r2)
    }

    fn require_transport(&self) -> Result<(), ModelError> {
        if self.is_zero_transport() {
            Err(ModelError::DegenerateTransport { t: self.t })
        } else {
            Ok(())
        }
    }
}

/// Mill prices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PricePair {
    pub p1: f64,
    pub p2: f64,
}

impl PricePair {
    pub fn new(p1: f64, p2: f64) -> Self {
        Self { p1, p2 }
    }

    pub fn from_array([p1, p2]: [f64; 2]) -> Self {
        Self { p1, p2 }
    }

    pub fn to_array(self) -> [f64; 2] {
        [self.p1, self.p2]
    }

    pub fn get(self, firm: Firm) -> f64 {
        self.to_array()[firm.index()]
    }

    pub fn swapped(self) -> Self {
        Self::new(self.p2, self.p1)
    }
}

/// Quantities sold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuantityPair {
    pub q1: f64,
    pub q2: f64,
}

impl QuantityPair {
    pub fn new(q1: f64, q2: f64) -> Self {
        Self { q1, q2 }
    }

    pub fn from_array([q1, q2]: [f64; 2]) -> Self {
        Self { q1, q2 }
    }

    pub fn to_array(self) -> [f64; 2] {
        [self.q1, self.q2]
    }

    pub fn get(self, firm: Firm) -> f64 {
        self.to_array()[firm.index()]
    }

    pub fn swapped(self) -> Self {
        Self::new(self.q2, self.q1)
    }

    pub fn total(self) -> f64 {
        self.q1 + self.q2
    }
}

/// Boundary consumer `r = (p2 - p1) / 2t + (r1 + r2) / 2`. Not clamped.
pub fn market_boundary(prices: PricePair, cfg: &MarketConfig) -> Result<f64, ModelError> {
    cfg.require_transport()?;
    Ok(boundary_unchecked(prices, cfg))
}

fn boundary_unchecked(prices: PricePair, cfg: &MarketConfig) -> f64 {
    (prices.p2 - prices.p1) / (2.0 * cfg.t) + 0.5 * (cfg.r1 + cfg.r2)
}

/// Closed-form integrals of individual demand over each firm's market area.
/// Returns the quantities and the boundary without range checks.
pub(crate) fn demand_unchecked(prices: PricePair, cfg: &MarketConfig) -> (QuantityPair, f64) {
    let MarketConfig { r1, r2, t } = *cfg;
    let r = boundary_unchecked(prices, cfg);
    let q1 = (1.0 - prices.p1 + t * r1) * r - 0.5 * t * r * r - t * r1 * r1;
    let far = 1.0 - r;
    let q2 = (1.0 - prices.p2 + t * (1.0 - r2)) * far - 0.5 * t * far * far - t * (1.0 - r2) * (1.0 - r2);
    (QuantityPair::new(q1, q2), r)
}

/// Aggregate quantities sold at the given mill prices.
pub fn quantities_from_prices(
    prices: PricePair,
    cfg: &MarketConfig,
) -> Result<QuantityPair, ModelError> {
    cfg.require_transport()?;
    let (q, r) = demand_unchecked(prices, cfg);
    if !(0.0..=1.0).contains(&r) {
        return Err(ModelError::BoundaryOutOfRange { boundary: r });
    }
    Ok(q)
}

/// `J[i][j] = dq_i / dp_j`, including the shift of the boundary
/// (`dr/dp1 = -1/2t`, `dr/dp2 = 1/2t`).
pub fn demand_jacobian(prices: PricePair, cfg: &MarketConfig) -> Result<Mat2, ModelError> {
    cfg.require_transport()?;
    Ok(jacobian_unchecked(prices, cfg))
}

pub(crate) fn jacobian_unchecked(prices: PricePair, cfg: &MarketConfig) -> Mat2 {
    let MarketConfig { r1, r2, t } = *cfg;
    let r = boundary_unchecked(prices, cfg);
    // Individual demand of the boundary consumer, as seen from each firm.
    let d1 = 1.0 - prices.p1 - t * (r - r1);
    let d2 = 1.0 - prices.p2 - t * (r2 - r);
    let k = 0.5 / t;
    [[-r - d1 * k, d1 * k], [d2 * k, -(1.0 - r) - d2 * k]]
}

/// Firm profits `p_i * q_i` (zero production cost).
pub fn profit(prices: PricePair, quantities: QuantityPair) -> [f64; 2] {
    [prices.p1 * quantities.q1, prices.p2 * quantities.q2]
}

/// Whether a price pair is an admissible market state: `p_i` and `r` in `[0, 1]`.
pub fn prices_admissible(prices: PricePair, cfg: &MarketConfig) -> bool {
    let in_unit = |v: f64| (0.0..=1.0).contains(&v);
    if !(in_unit(prices.p1) && in_unit(prices.p2)) {
        return false;
    }
    cfg.is_zero_transport() || in_unit(boundary_unchecked(prices, cfg))
}

/// Market-clearing prices for the given quantities.
///
/// Damped Newton from `guess`; the accepted root must have `p_i` and `r` in
/// `[0, 1]`. If that fails, Newton is restarted from a fixed 11 x 11 grid of
/// seeds over `[0, 1]^2` and the first admissible root in grid order wins.
/// For `|t| < TRANSPORT_EPS` both prices equal `1 - q1 - q2`.
pub fn prices_from_quantities(
    quantities: QuantityPair,
    cfg: &MarketConfig,
    guess: PricePair,
) -> Result<PricePair, ModelError> {
    let no_root = ModelError::NoAdmissibleRoot {
        q1: quantities.q1,
        q2: quantities.q2,
    };
    if !(quantities.q1.is_finite() && quantities.q2.is_finite()) {
        return Err(no_root);
    }
    if cfg.is_zero_transport() {
        let p = 1.0 - quantities.total();
        let prices = PricePair::new(p, p);
        return if prices_admissible(prices, cfg) {
            Ok(prices)
        } else {
            Err(no_root)
        };
    }

    let target = quantities.to_array();
    let system = |p: [f64; 2]| {
        let prices = PricePair::from_array(p);
        let (q, _) = demand_unchecked(prices, cfg);
        let f = [q.q1 - target[0], q.q2 - target[1]];
        Some((f, jacobian_unchecked(prices, cfg)))
    };
    // Same rounding floor as the equilibrium solve: eps / 2t in the boundary.
    let settings = NewtonSettings {
        tol: INVERSION_TOL.max(f64::EPSILON / cfg.t.abs()),
        max_iter: 60,
        max_halvings: 30,
    };
    let attempt = |seed: [f64; 2]| {
        let out = damped_newton(system, seed, &settings);
        let prices = PricePair::from_array(out.x);
        (out.converged && prices_admissible(prices, cfg)).then_some(prices)
    };

    if let Some(p) = attempt(guess.to_array()) {
        return Ok(p);
    }
    const SEEDS: usize = 11;
    for i in 0..SEEDS {
        for j in 0..SEEDS {
            let seed = [i as f64 / (SEEDS - 1) as f64, j as f64 / (SEEDS - 1) as f64];
            if let Some(p) = attempt(seed) {
                return Ok(p);
            }
        }
    }
    Err(no_root)
}
