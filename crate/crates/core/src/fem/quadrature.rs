//! Quadrature rules on triangles in barycentric coordinates.

/// Points `(λ₀, λ₁, λ₂)` and weights summing to one; multiply by the area.
#[derive(Debug, Clone, Copy)]
pub struct Rule {
    pub points: &'static [[f64; 3]],
    pub weights: &'static [f64],
}

const THIRD: f64 = 1.0 / 3.0;

/// Exact for linear polynomials.
pub const CENTROID: Rule = Rule {
    points: &[[THIRD, THIRD, THIRD]],
    weights: &[1.0],
};

/// Vertices; exact for linear polynomials. Used where a nodal (lumped) quadrature
/// keeps the discrete operators consistent with each other.
pub const VERTEX: Rule = Rule {
    points: &[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
    weights: &[THIRD, THIRD, THIRD],
};

/// Edge midpoints; exact for quadratics.
pub const MIDPOINT: Rule = Rule {
    points: &[[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]],
    weights: &[THIRD, THIRD, THIRD],
};

const A1: f64 = 0.059_715_871_789_769_82;
const B1: f64 = 0.470_142_064_105_115_1;
const A2: f64 = 0.797_426_985_353_087_3;
const B2: f64 = 0.101_286_507_323_456_34;
const W0: f64 = 0.225;
const W1: f64 = 0.132_394_152_788_506_2;
const W2: f64 = 0.125_939_180_544_827_15;

/// Seven-point rule exact for quintics.
pub const SEVEN_POINT: Rule = Rule {
    points: &[
        [THIRD, THIRD, THIRD],
        [A1, B1, B1],
        [B1, A1, B1],
        [B1, B1, A1],
        [A2, B2, B2],
        [B2, A2, B2],
        [B2, B2, A2],
    ],
    weights: &[W0, W1, W1, W1, W2, W2, W2],
};

impl Rule {
    /// Physical coordinates of the quadrature points on triangle `v`.
    pub fn map(&self, v: &[[f64; 2]; 3]) -> impl Iterator<Item = ([f64; 2], f64, [f64; 3])> + '_ {
        let v = *v;
        self.points.iter().zip(self.weights).map(move |(l, &w)| {
            let x = l[0] * v[0][0] + l[1] * v[1][0] + l[2] * v[2][0];
            let y = l[0] * v[0][1] + l[1] * v[1][1] + l[2] * v[2][1];
            ([x, y], w, *l)
        })
    }
}
