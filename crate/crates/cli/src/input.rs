//! Parsing of time lists and evaluation points.

use heatdeform::linalg::real_vec;
use heatdeform::{CVec, C64};

/// Comma-separated complex times such as `0.2,0.3i,0.1+0.05i`.
pub fn parse_times(text: &str) -> Result<Vec<C64>, String> {
    let times = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<C64>().map_err(|_| format!("invalid time {s:?}")))
        .collect::<Result<Vec<_>, _>>()?;
    if times.is_empty() {
        return Err("empty time list".into());
    }
    if let Some(t) = times.iter().find(|t| !(t.re.is_finite() && t.im.is_finite())) {
        return Err(format!("time {t} is not finite"));
    }
    Ok(times)
}

fn parse_vector(text: &str, nu: usize) -> Result<CVec, String> {
    let values = text
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| format!("invalid coordinate {s:?}")))
        .collect::<Result<Vec<_>, _>>()?;
    match values.len() {
        1 => Ok(real_vec(&vec![values[0]; nu])),
        n if n == nu => Ok(real_vec(&values)),
        n => Err(format!("point {text:?} has {n} coordinates, expected 1 or {nu}")),
    }
}

/// Points `(x, y)` given either as `x:y;x:y;…` with comma-separated
/// coordinates (a single number is repeated over all `ν` coordinates) or as
/// `grid:LO:HI:N`, the `N×N` pairs of `LO + k(HI − LO)/(N − 1)` times the
/// all-ones vector.
pub fn parse_points(text: &str, nu: usize) -> Result<Vec<(CVec, CVec)>, String> {
    if let Some(spec) = text.strip_prefix("grid:") {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("grid must be grid:LO:HI:N, got {text:?}"));
        }
        let lo: f64 = parts[0].parse().map_err(|_| format!("invalid grid bound {:?}", parts[0]))?;
        let hi: f64 = parts[1].parse().map_err(|_| format!("invalid grid bound {:?}", parts[1]))?;
        let n: usize = parts[2].parse().map_err(|_| format!("invalid grid size {:?}", parts[2]))?;
        if n < 2 || !(lo < hi) {
            return Err(format!("grid needs LO < HI and N ≥ 2, got {text:?}"));
        }
        let axis: Vec<f64> = (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect();
        return Ok(axis
            .iter()
            .flat_map(|&x| axis.iter().map(move |&y| (real_vec(&vec![x; nu]), real_vec(&vec![y; nu]))))
            .collect());
    }
    let points = text
        .split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|p| {
            let (x, y) = p.split_once(':').ok_or_else(|| format!("point {p:?} must be x:y"))?;
            Ok((parse_vector(x, nu)?, parse_vector(y, nu)?))
        })
        .collect::<Result<Vec<_>, String>>()?;
    if points.is_empty() {
        return Err("empty point list".into());
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn times() {
        let t = parse_times("0.2,0.3i, 0.1+0.05i").unwrap();
        assert_eq!(t, vec![C64::new(0.2, 0.0), C64::new(0.0, 0.3), C64::new(0.1, 0.05)]);
        assert!(parse_times("").is_err());
        assert!(parse_times("0.2,abc").is_err());
        assert!(parse_times("inf").is_err());
    }

    #[test]
    fn points() {
        let p = parse_points("0.5:-0.5; 1,2:3,4", 2).unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p[0].0, real_vec(&[0.5, 0.5]));
        assert_eq!(p[1].1, real_vec(&[3.0, 4.0]));
        assert!(parse_points("1,2,3:0", 2).is_err());
        assert!(parse_points("1", 1).is_err());
        let g = parse_points("grid:-1:1:3", 1).unwrap();
        assert_eq!(g.len(), 9);
        assert_eq!(g[5], (real_vec(&[0.0]), real_vec(&[1.0])));
        assert!(parse_points("grid:1:0:3", 1).is_err());
    }
}
