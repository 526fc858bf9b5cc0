//! Text and JSON formats: code files, rationals as `"p/q"` strings and
//! complex matrices as row-major `[re, im]` pairs.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::codes::{LinearCode, DISTANCE_CAP};
use crate::error::{Error, Result};
use crate::{CMat, C64, Q};

/// Parses `"p/q"` or an integer.
pub fn parse_rational(s: &str) -> Result<Q> {
    let s = s.trim();
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n: i64 = n
        .parse()
        .map_err(|_| Error::Parse(format!("bad rational {s:?}")))?;
    let d: i64 = d
        .parse()
        .map_err(|_| Error::Parse(format!("bad rational {s:?}")))?;
    if d == 0 {
        return Err(Error::Parse(format!("zero denominator in {s:?}")));
    }
    Ok(Q::new(n, d))
}

/// Reads a code file: `q K N`, then `N` rows of `K` symbols, then an
/// optional `d <value>` line. A stated distance is checked by enumeration
/// when `q^N` is within [`DISTANCE_CAP`], and trusted otherwise.
pub fn parse_code(text: &str) -> Result<LinearCode> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty code file".into()))?;
    let nums = |l: &str| -> Result<Vec<u64>> {
        l.split_whitespace()
            .map(|t| {
                t.parse()
                    .map_err(|_| Error::Parse(format!("bad integer {t:?}")))
            })
            .collect()
    };
    let h = nums(header)?;
    let [q, k, n] = h[..] else {
        return Err(Error::Parse("header must be `q K N`".into()));
    };
    let mut rows = Vec::with_capacity(n as usize);
    for _ in 0..n {
        let l = lines
            .next()
            .ok_or_else(|| Error::Parse(format!("expected {n} generator rows")))?;
        let row = nums(l)?;
        if row.len() as u64 != k {
            return Err(Error::Parse(format!(
                "row {:?} does not have {k} symbols",
                l
            )));
        }
        rows.push(
            row.into_iter()
                .map(|x| u32::try_from(x).unwrap_or(u32::MAX))
                .collect(),
        );
    }
    let mut code = LinearCode::over(q, rows)?;
    if let Some(l) = lines.next() {
        let d = l
            .strip_prefix('d')
            .and_then(|v| v.trim().parse::<usize>().ok())
            .ok_or_else(|| Error::Parse(format!("expected `d <value>`, got {l:?}")))?;
        if (q as f64).powi(n as i32) <= DISTANCE_CAP as f64 {
            let actual = code.distance()?;
            if actual != d {
                return Err(Error::Parse(format!(
                    "stated distance {d} but the code has distance {actual}"
                )));
            }
        } else {
            code = code.with_distance(d);
        }
        if let Some(extra) = lines.next() {
            return Err(Error::Parse(format!("trailing content {extra:?}")));
        }
    }
    Ok(code)
}

/// Writes the format read by [`parse_code`], including the distance when
/// it is known.
pub fn format_code(code: &LinearCode) -> String {
    let mut s = format!("{} {} {}\n", code.q(), code.length(), code.dimension());
    for row in code.generator() {
        let r: Vec<String> = row.iter().map(u32::to_string).collect();
        s.push_str(&r.join(" "));
        s.push('\n');
    }
    if let Some(d) = code.cached_distance() {
        s.push_str(&format!("d {d}\n"));
    }
    s
}

pub fn q_to_f64(x: &Q) -> f64 {
    *x.numer() as f64 / *x.denom() as f64
}

pub fn format_rational(x: &Q) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

/// Serde adapter for `Q` as a `"p/q"` string.
pub mod rational {
    use super::*;

    pub fn serialize<S: Serializer>(x: &Q, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Q, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map_err(D::Error::custom)
    }
}

/// Serde adapter for `Vec<Q>`.
pub mod rational_vec {
    use super::*;

    pub fn serialize<S: Serializer>(x: &[Q], s: S) -> std::result::Result<S::Ok, S::Error> {
        let v: Vec<String> = x.iter().map(format_rational).collect();
        v.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Q>, D::Error> {
        let v = Vec::<String>::deserialize(d)?;
        v.iter()
            .map(|s| parse_rational(s).map_err(D::Error::custom))
            .collect()
    }
}

/// Serde adapter for `Option<Q>`.
pub mod rational_opt {
    use super::*;

    pub fn serialize<S: Serializer>(x: &Option<Q>, s: S) -> std::result::Result<S::Ok, S::Error> {
        x.as_ref().map(format_rational).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Option<Q>, D::Error> {
        let v = Option::<String>::deserialize(d)?;
        v.map(|s| parse_rational(&s).map_err(D::Error::custom))
            .transpose()
    }
}

/// Serde adapter for a complex matrix as `[[[re, im], ...], ...]` rows.
pub mod matrix {
    use super::*;

    pub fn to_rows(m: &CMat) -> Vec<Vec<[f64; 2]>> {
        (0..m.nrows())
            .map(|i| {
                (0..m.ncols())
                    .map(|j| [m[(i, j)].re, m[(i, j)].im])
                    .collect()
            })
            .collect()
    }

    pub fn from_rows(rows: &[Vec<[f64; 2]>]) -> Result<CMat> {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        if rows.iter().any(|x| x.len() != c) {
            return Err(Error::Parse("ragged matrix".into()));
        }
        Ok(CMat::from_fn(r, c, |i, j| {
            C64::new(rows[i][j][0], rows[i][j][1])
        }))
    }

    pub fn serialize<S: Serializer>(m: &CMat, s: S) -> std::result::Result<S::Ok, S::Error> {
        to_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<CMat, D::Error> {
        let rows = Vec::<Vec<[f64; 2]>>::deserialize(d)?;
        from_rows(&rows).map_err(D::Error::custom)
    }
}

/// Serde adapter for a list of complex matrices.
pub mod matrix_vec {
    use super::*;

    pub fn serialize<S: Serializer>(m: &[CMat], s: S) -> std::result::Result<S::Ok, S::Error> {
        let v: Vec<_> = m.iter().map(matrix::to_rows).collect();
        v.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Vec<CMat>, D::Error> {
        let v = Vec::<Vec<Vec<[f64; 2]>>>::deserialize(d)?;
        v.iter()
            .map(|r| matrix::from_rows(r).map_err(D::Error::custom))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn code_files_round_trip_and_reject_bad_input() {
        let text = "2 7 4\n1 0 0 0 1 1 0\n0 1 0 0 1 0 1\n0 0 1 0 0 1 1\n0 0 0 1 1 1 1\nd 3\n";
        let mut c = parse_code(text).unwrap();
        assert_eq!(
            (c.length(), c.dimension(), c.distance().unwrap()),
            (7, 4, 3)
        );
        let again = parse_code(&format_code(&c)).unwrap();
        assert_eq!(again.generator(), c.generator());
        assert!(matches!(
            parse_code("2 3 2\n1 1 0\n1 1 0\n"),
            Err(Error::RankDeficient { .. })
        ));
        assert!(matches!(
            parse_code("2 3 1\n1 1 1\nd 2\n"),
            Err(Error::Parse(_))
        ));
        assert!(matches!(parse_code("2 3 1\n1 1\n"), Err(Error::Parse(_))));
        assert!(parse_code("6 3 1\n1 1 1\n").is_err());
    }

    #[test]
    fn rationals_round_trip() {
        for s in ["1/3", "-2/4", "7", "0/5"] {
            let q = parse_rational(s).unwrap();
            assert_eq!(parse_rational(&format_rational(&q)).unwrap(), q);
        }
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
    }

    #[test]
    fn matrices_round_trip() {
        let m = CMat::from_fn(2, 3, |i, j| C64::new(i as f64, -(j as f64) / 3.0));
        let back = matrix::from_rows(&matrix::to_rows(&m)).unwrap();
        assert_eq!(m, back);
    }
}
