//! Input-state expressions such as `uu+i*dd` or `0.6*du - 0.8i*ud`.
//!
//! A term is an optional coefficient followed by `*` and a ket label. Labels
//! are two letters from {d, u} (or the arrows ↓, ↑), qubit 2 first. The
//! coefficient is a real number, `i`, or a real number followed by `i`. The
//! result is normalized.

use crate::error::{Error, Result};
use crate::evolve::PureState;
use crate::operator::C64;

fn ket_index(label: &str) -> Option<usize> {
    let bits: Vec<usize> = label
        .chars()
        .map(|c| match c {
            'd' | 'D' | '↓' => Some(0),
            'u' | 'U' | '↑' => Some(1),
            _ => None,
        })
        .collect::<Option<_>>()?;
    match bits.as_slice() {
        [b2, b1] => Some(2 * b2 + b1),
        _ => None,
    }
}

fn coefficient(text: &str) -> Option<C64> {
    let t = text.trim();
    if t.is_empty() {
        return Some(C64::new(1.0, 0.0));
    }
    if let Some(im) = t.strip_suffix('i') {
        let v = if im.is_empty() {
            1.0
        } else {
            im.trim().parse().ok()?
        };
        return Some(C64::new(0.0, v));
    }
    Some(C64::new(t.parse().ok()?, 0.0))
}

pub fn parse_state(spec: &str) -> Result<PureState> {
    let bad = || Error::Usage(format!("cannot parse input state `{spec}`"));
    let compact: String = spec.chars().filter(|c| !c.is_whitespace()).collect();
    if compact.is_empty() {
        return Err(bad());
    }
    let mut terms: Vec<(f64, String)> = Vec::new();
    let mut sign = 1.0;
    let mut cur = String::new();
    let mut prev: Option<char> = None;
    for c in compact.chars() {
        // a sign starts a new term unless it belongs to an exponent
        let starts_term = (c == '+' || c == '-') && !matches!(prev, Some('e') | Some('E') | None);
        if starts_term {
            terms.push((sign, std::mem::take(&mut cur)));
            sign = if c == '-' { -1.0 } else { 1.0 };
        } else if c == '-' && prev.is_none() {
            sign = -1.0;
        } else if !(c == '+' && prev.is_none()) {
            cur.push(c);
        }
        prev = Some(c);
    }
    terms.push((sign, cur));

    let mut amps = [C64::new(0.0, 0.0); 4];
    for (sign, term) in terms {
        let (coef, ket) = match term.rsplit_once('*') {
            Some((c, k)) => (c, k),
            None => ("", term.as_str()),
        };
        let k = ket_index(ket).ok_or_else(bad)?;
        amps[k] += coefficient(coef).ok_or_else(bad)? * sign;
    }
    PureState::from_amplitudes(&amps).map_err(|_| bad())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn figure_state() {
        let s = parse_state("uu+i*dd").unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s.vector()[3] - C64::new(h, 0.0)).norm() < 1e-15);
        assert!((s.vector()[0] - C64::new(0.0, h)).norm() < 1e-15);
    }

    #[test]
    fn labels_and_coefficients() {
        let s = parse_state("0.6*du - 0.8i*ud").unwrap();
        assert!((s.vector()[1].re - 0.6).abs() < 1e-15);
        assert!((s.vector()[2].im + 0.8).abs() < 1e-15);
        let a = parse_state("↑↓").unwrap();
        assert_eq!(a.population(2), 1.0);
        let e = parse_state("-1e-1*dd+2*uu").unwrap();
        assert!(e.vector()[0].re < 0.0);
    }

    #[test]
    fn rejects_garbage() {
        for s in ["", "xx", "dd+", "2*ddd", "dd-dd", "a*uu"] {
            assert!(parse_state(s).is_err(), "{s}");
        }
    }
}
