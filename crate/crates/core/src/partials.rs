//! Closed-form derivatives of the equinoctial position map
//! `r(p, f, g, h, k, L)` with respect to the six elements.
//!
//! Element order everywhere is `[p, f, g, h, k, L]`.

use nalgebra::Vector3;

use crate::elements::Meoe;

pub const P: usize = 0;
pub const F: usize = 1;
pub const G: usize = 2;
pub const H: usize = 3;
pub const K: usize = 4;
pub const L: usize = 5;

/// Shared trigonometric and auxiliary terms at one element point.
#[derive(Debug, Clone, Copy)]
pub struct PositionTerms {
    pub r_vec: Vector3<f64>,
    pub r: f64,
    sl: f64,
    cl: f64,
    alpha2: f64,
    beta2: f64,
    eta: [f64; 10],
    oe: Meoe,
}

impl PositionTerms {
    pub fn new(oe: &Meoe) -> Self {
        let Meoe { p, f, g, h, k, l } = *oe;
        let (sl, cl) = l.sin_cos();
        let alpha2 = h * h - k * k;
        let beta2 = 1.0 + h * h + k * k;
        let eta1 = 1.0 + f * cl + g * sl;
        let r = p / eta1;
        let r_vec = Vector3::new(
            (1.0 + alpha2) * cl + 2.0 * h * k * sl,
            (1.0 - alpha2) * sl + 2.0 * h * k * cl,
            2.0 * (h * sl - k * cl),
        ) * (r / beta2);
        let eta2 = (f * sl - g * cl) / eta1;
        let eta3 = (f * cl + g * sl) / eta1;
        let eta4 = h * sl - k * cl;
        let eta5 = h * cl + k * sl;
        let eta6 = h * cl - k * sl;
        let eta7 = sl - eta2 * cl;
        let eta8 = cl + eta2 * sl;
        let eta9 = 2.0 * eta2 * eta2 + eta3 - 1.0;
        Self {
            r_vec,
            r,
            sl,
            cl,
            alpha2,
            beta2,
            eta: [0.0, eta1, eta2, eta3, eta4, eta5, eta6, eta7, eta8, eta9],
            oe: *oe,
        }
    }

    /// The in-plane direction term shared by `dr/dL` and `d2r/dL2`.
    fn longitude_direction(&self) -> Vector3<f64> {
        let Meoe { h, k, .. } = self.oe;
        Vector3::new(
            2.0 * h * k * self.cl - (1.0 + self.alpha2) * self.sl,
            (1.0 - self.alpha2) * self.cl - 2.0 * h * k * self.sl,
            2.0 * self.eta[5],
        )
    }

    /// Columns `dr/d(element)`.
    pub fn first(&self) -> [Vector3<f64>; 6] {
        let Meoe { p, h, k, .. } = self.oe;
        let (rv, r, b2) = (self.r_vec, self.r, self.beta2);
        let e = &self.eta;
        let two_r_b2 = 2.0 * r / b2;
        [
            rv / p,
            -rv * (self.cl / e[1]),
            -rv * (self.sl / e[1]),
            -rv * (2.0 * h / b2) + Vector3::new(e[5], -e[4], self.sl) * two_r_b2,
            -rv * (2.0 * k / b2) + Vector3::new(e[4], e[5], -self.cl) * two_r_b2,
            rv * e[2] + self.longitude_direction() * (r / b2),
        ]
    }

    /// Symmetric tensor `d2r/d(element_i) d(element_j)`.
    pub fn second(&self, first: &[Vector3<f64>; 6]) -> [[Vector3<f64>; 6]; 6] {
        let Meoe { p, h, k, .. } = self.oe;
        let (rv, r, b2) = (self.r_vec, self.r, self.beta2);
        let b4 = b2 * b2;
        let e = &self.eta;
        let (sl, cl) = (self.sl, self.cl);
        let mut t = [[Vector3::zeros(); 6]; 6];

        let mut set = |i: usize, j: usize, v: Vector3<f64>| {
            t[i][j] = v;
            t[j][i] = v;
        };

        for j in [F, G, H, K, L] {
            set(P, j, first[j] / p);
        }
        set(F, F, rv * (2.0 * cl * cl / (e[1] * e[1])));
        set(G, G, rv * (2.0 * sl * sl / (e[1] * e[1])));
        set(F, G, rv * ((2.0 * l_sin_cos(sl, cl)) / (e[1] * e[1])));
        set(
            H,
            H,
            rv * (8.0 * h * h / b4)
                - Vector3::new(2.0 * h * e[5] + k * e[4], sl + k * e[5] - 2.0 * h * e[4], 2.0 * h * sl + e[4])
                    * (4.0 * r / b4),
        );
        set(
            K,
            K,
            rv * (8.0 * k * k / b4)
                - Vector3::new(cl + h * e[5] + 2.0 * k * e[4], 2.0 * k * e[5] - h * e[4], e[4] - 2.0 * k * cl)
                    * (4.0 * r / b4),
        );
        set(
            H,
            K,
            rv * (8.0 * h * k / b4)
                + Vector3::new((2.0 - b2) * sl, (2.0 - b2) * cl, 2.0 * e[6]) * (2.0 * r / b4),
        );
        set(L, L, rv * e[9] + self.longitude_direction() * (2.0 * r * e[2] / b2));
        set(F, H, first[H] * (-cl / e[1]));
        set(F, K, first[K] * (-cl / e[1]));
        set(G, H, first[H] * (-sl / e[1]));
        set(G, K, first[K] * (-sl / e[1]));
        set(F, L, rv * (e[7] / e[1]) - first[L] * (cl / e[1]));
        set(G, L, -rv * (e[8] / e[1]) - first[L] * (sl / e[1]));
        set(
            H,
            L,
            -first[L] * (2.0 * h / b2)
                + Vector3::new(e[2] * e[5] - e[4], -e[2] * e[4] - e[5], e[8]) * (2.0 * r / b2),
        );
        set(
            K,
            L,
            -first[L] * (2.0 * k / b2)
                + Vector3::new(e[2] * e[4] + e[5], e[2] * e[5] - e[4], e[7]) * (2.0 * r / b2),
        );
        set(P, P, Vector3::zeros());
        t
    }

    /// Gradient of the radius magnitude.
    pub fn radius_gradient(&self) -> [f64; 6] {
        let r = self.r;
        let e = &self.eta;
        [r / self.oe.p, -r * self.cl / e[1], -r * self.sl / e[1], 0.0, 0.0, r * e[2]]
    }
}

#[inline]
fn l_sin_cos(sl: f64, cl: f64) -> f64 {
    // sin 2L / 2
    sl * cl
}

pub fn position_partials(oe: &Meoe) -> [Vector3<f64>; 6] {
    PositionTerms::new(oe).first()
}

pub fn position_second_partials(oe: &Meoe) -> [[Vector3<f64>; 6]; 6] {
    let terms = PositionTerms::new(oe);
    terms.second(&terms.first())
}

pub fn radius_partials(oe: &Meoe) -> [f64; 6] {
    PositionTerms::new(oe).radius_gradient()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::AU;
    use crate::elements::{classical_to_meoe, meoe_to_cartesian, ClassicalElements};
    use approx::assert_relative_eq;

    fn table1() -> Meoe {
        classical_to_meoe(&ClassicalElements::from_au_deg(1.0, 0.4, 10.0, 15.0, 25.0, 10.0)).unwrap()
    }

    #[test]
    fn dr_dp_is_r_over_p() {
        let oe = table1();
        let d = position_partials(&oe);
        let r = meoe_to_cartesian(&oe, 1.0).r;
        assert_relative_eq!(d[P], r / oe.p, max_relative = 1e-15);
    }

    #[test]
    fn equatorial_dh_third_component() {
        let oe = Meoe { h: 0.0, k: 0.0, ..table1() };
        let d = position_partials(&oe);
        assert_relative_eq!(d[H].z, 2.0 * oe.radius() * oe.l.sin(), max_relative = 1e-14);
    }

    #[test]
    fn d2r_dp2_is_zero_and_tensor_symmetric() {
        let t = position_second_partials(&table1());
        assert_eq!(t[P][P], Vector3::zeros());
        for i in 0..6 {
            for j in 0..6 {
                assert_eq!(t[i][j], t[j][i]);
            }
        }
    }

    fn shifted(oe: &Meoe, j: usize, d: f64) -> Meoe {
        let mut x = oe.to_array();
        x[j] += d;
        Meoe::from_array(x)
    }

    fn steps(oe: &Meoe) -> [f64; 6] {
        [oe.p * 1e-5, 1e-5, 1e-5, 1e-5, 1e-5, 1e-5]
    }

    fn test_points() -> Vec<Meoe> {
        let base = table1();
        vec![
            base,
            Meoe { l: base.l + 7.3, ..base },
            Meoe { h: -0.3, k: 0.45, l: 2.1, ..base },
            Meoe { f: -0.2, g: 0.55, h: 0.05, k: -0.6, l: -4.0, ..base },
        ]
    }

    #[test]
    fn first_partials_match_central_differences() {
        for oe in test_points() {
            let d = position_partials(&oe);
            let scale = oe.radius();
            for (j, step) in steps(&oe).into_iter().enumerate() {
                let fd = (meoe_to_cartesian(&shifted(&oe, j, step), 1.0).r
                    - meoe_to_cartesian(&shifted(&oe, j, -step), 1.0).r)
                    / (2.0 * step);
                let unit = if j == P { scale / oe.p } else { scale };
                assert!((d[j] - fd).norm() <= 1e-8 * unit, "element {j}: {:?} vs {:?}", d[j], fd);
            }
        }
    }

    #[test]
    fn second_partials_match_differenced_first_partials() {
        for oe in test_points() {
            let t = position_second_partials(&oe);
            let hs = steps(&oe);
            for j in 0..6 {
                let plus = position_partials(&shifted(&oe, j, hs[j]));
                let minus = position_partials(&shifted(&oe, j, -hs[j]));
                for i in 0..6 {
                    let fd = (plus[i] - minus[i]) / (2.0 * hs[j]);
                    let mut unit = oe.radius();
                    if i == P {
                        unit /= oe.p;
                    }
                    if j == P {
                        unit /= oe.p;
                    }
                    assert!(
                        (t[i][j] - fd).norm() <= 1e-7 * unit,
                        "pair ({i},{j}): {:?} vs {:?}",
                        t[i][j],
                        fd
                    );
                }
            }
        }
    }

    #[test]
    fn radius_partials_match_central_differences() {
        for oe in test_points() {
            let d = radius_partials(&oe);
            for (j, step) in steps(&oe).into_iter().enumerate() {
                let fd = (shifted(&oe, j, step).radius() - shifted(&oe, j, -step).radius()) / (2.0 * step);
                let unit = if j == P { 1.0 } else { oe.radius() };
                assert!((d[j] - fd).abs() <= 1e-8 * unit, "element {j}");
            }
        }
    }

    #[test]
    fn radius_partials_structure() {
        let oe = table1();
        let d = radius_partials(&oe);
        assert_eq!(d[H], 0.0);
        assert_eq!(d[K], 0.0);
        let circ = Meoe { f: 0.0, g: 0.0, ..oe };
        assert_eq!(radius_partials(&circ)[L], 0.0);
        assert!(oe.p > 0.5 * AU);
    }
}
