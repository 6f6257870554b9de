use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use super::Law;
use crate::geometry::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FluxKind {
    Central,
    Rusanov,
    TadmorEc,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum UnsupportedFlux {
    #[error("unknown numerical flux {0:?} (expected central, rusanov or tadmor_ec)")]
    Unknown(String),
    #[error("entropy-conservative flux needs a scalar law, got {0} components")]
    NotScalar(usize),
}

impl FromStr for FluxKind {
    type Err = UnsupportedFlux;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "central" => Ok(FluxKind::Central),
            "rusanov" => Ok(FluxKind::Rusanov),
            "tadmor_ec" | "tadmor-ec" | "ec" => Ok(FluxKind::TadmorEc),
            other => Err(UnsupportedFlux::Unknown(other.to_string())),
        }
    }
}

impl fmt::Display for FluxKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FluxKind::Central => "central",
            FluxKind::Rusanov => "rusanov",
            FluxKind::TadmorEc => "tadmor_ec",
        })
    }
}

impl FluxKind {
    pub fn check(self, law: &Law) -> Result<(), UnsupportedFlux> {
        match (self, law.components()) {
            (FluxKind::TadmorEc, p) if p != 1 => Err(UnsupportedFlux::NotScalar(p)),
            _ => Ok(()),
        }
    }

    /// `f̂(u_l, u_r, n)` for a unit normal pointing from the `u_l` side.
    /// Antisymmetric bit-for-bit under swapping the states and negating `n`.
    #[inline]
    pub fn eval(self, law: &Law, ul: f64, ur: f64, n: &Vec2) -> f64 {
        match self {
            FluxKind::Central => central(law, ul, ur, n),
            FluxKind::Rusanov => {
                let lambda = law.wave_speed(ul, n).max(law.wave_speed(ur, n));
                central(law, ul, ur, n) - 0.5 * lambda * (ur - ul)
            }
            FluxKind::TadmorEc => match *law {
                Law::Advection { velocity: a } => (a[0] * n.x + a[1] * n.y) * (0.5 * (ul + ur)),
                Law::Burgers => {
                    let s = ul * ul + ur * ur + ul * ur;
                    s / 6.0 * (n.x + n.y)
                }
            },
        }
    }
}

#[inline]
fn central(law: &Law, ul: f64, ur: f64, n: &Vec2) -> f64 {
    let fl = law.flux(ul);
    let fr = law.flux(ur);
    0.5 * ((fl.x + fr.x) * n.x + (fl.y + fr.y) * n.y)
}

/// `ĝ = {v} f̂ − θ({v})·n`.
#[inline]
pub fn entropy_numerical_flux(law: &Law, fhat: f64, ul: f64, ur: f64, n: &Vec2) -> f64 {
    let vm = 0.5 * (law.entropy_variable(ul) + law.entropy_variable(ur));
    vm * fhat - law.potential(vm).dot(n)
}

/// `[v] f̂ − [θ]·n` with `[ω] = ω_outside − ω_inside`; `≤ 0` is entropy stable.
#[inline]
pub fn tadmor_edge_check(law: &Law, u_in: f64, u_out: f64, n: &Vec2, fhat: f64) -> f64 {
    let (vi, vo) = (law.entropy_variable(u_in), law.entropy_variable(u_out));
    (vo - vi) * fhat - (law.potential(vo) - law.potential(vi)).dot(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::vec2;
    use crate::physics::ADMISSIBLE_BOX;
    use proptest::prelude::*;

    const KINDS: [FluxKind; 3] = [FluxKind::Central, FluxKind::Rusanov, FluxKind::TadmorEc];

    fn laws() -> [Law; 2] {
        [Law::linear_advection([0.8, -0.4]), Law::burgers_2d()]
    }

    #[test]
    fn rusanov_is_upwind_for_advection() {
        let l = Law::linear_advection([1.0, 0.0]);
        let n = vec2(1.0, 0.0);
        assert_eq!(FluxKind::Rusanov.eval(&l, 1.0, 0.0, &n), 1.0);
        assert_eq!(FluxKind::Rusanov.eval(&l, 0.0, 1.0, &n), 0.0);
    }

    #[test]
    fn burgers_ec_closed_form() {
        let l = Law::burgers_2d();
        let n = vec2(1.0, 0.0);
        let (a, b) = (0.3, -1.1);
        let expect = (a * a + a * b + b * b) / 6.0;
        assert!((FluxKind::TadmorEc.eval(&l, a, b, &n) - expect).abs() < 1e-16);
    }

    #[test]
    fn entropy_flux_hand_value() {
        let l = Law::burgers_2d();
        let n = vec2(1.0, 0.0);
        let f = FluxKind::TadmorEc.eval(&l, 0.0, 1.0, &n);
        let g = entropy_numerical_flux(&l, f, 0.0, 1.0, &n);
        assert!((g - 1.0 / 16.0).abs() < 1e-16);
    }

    #[test]
    fn parse_names() {
        assert_eq!("tadmor_ec".parse::<FluxKind>().unwrap(), FluxKind::TadmorEc);
        assert!("roe".parse::<FluxKind>().is_err());
        for k in KINDS {
            assert_eq!(k.to_string().parse::<FluxKind>().unwrap(), k);
        }
    }

    fn unit(t: f64) -> Vec2 {
        vec2(t.cos(), t.sin())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn consistency_and_conservation(
            a in -ADMISSIBLE_BOX..ADMISSIBLE_BOX,
            b in -ADMISSIBLE_BOX..ADMISSIBLE_BOX,
            t in 0.0..std::f64::consts::TAU,
        ) {
            let n = unit(t);
            for l in laws() {
                for k in KINDS {
                    let scale = 1.0 + a * a;
                    prop_assert!((k.eval(&l, a, a, &n) - l.flux(a).dot(&n)).abs() <= 1e-13 * scale);
                    prop_assert_eq!(k.eval(&l, a, b, &n), -k.eval(&l, b, a, &(-n)));
                    let g = entropy_numerical_flux(&l, k.eval(&l, a, a, &n), a, a, &n);
                    prop_assert!((g - l.entropy_flux(a).dot(&n)).abs() <= 1e-12 * scale * (1.0 + a.abs()));
                }
            }
        }

        #[test]
        fn tadmor_conditions(
            a in -ADMISSIBLE_BOX..ADMISSIBLE_BOX,
            b in -ADMISSIBLE_BOX..ADMISSIBLE_BOX,
            t in 0.0..std::f64::consts::TAU,
        ) {
            let n = unit(t);
            for l in laws() {
                let ec = tadmor_edge_check(&l, a, b, &n, FluxKind::TadmorEc.eval(&l, a, b, &n));
                prop_assert!(ec.abs() <= 1e-12 * (1.0 + a.abs() + b.abs()).powi(3));
                let rus = tadmor_edge_check(&l, a, b, &n, FluxKind::Rusanov.eval(&l, a, b, &n));
                prop_assert!(rus <= 1e-13 * (1.0 + a.abs() + b.abs()).powi(3));
            }
        }

        #[test]
        fn entropy_flux_matches_recomputation(
            a in -ADMISSIBLE_BOX..ADMISSIBLE_BOX,
            b in -ADMISSIBLE_BOX..ADMISSIBLE_BOX,
            t in 0.0..std::f64::consts::TAU,
        ) {
            let n = unit(t);
            let l = Law::burgers_2d();
            let f = FluxKind::Rusanov.eval(&l, a, b, &n);
            let vm = 0.5 * (a + b);
            let brute = vm * f - vm.powi(3) / 6.0 * (n.x + n.y);
            prop_assert!((entropy_numerical_flux(&l, f, a, b, &n) - brute).abs() <= 1e-13 * (1.0 + vm.abs().powi(3) + f.abs() * vm.abs()));
        }
    }
}
