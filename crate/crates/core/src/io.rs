//! Sample tables, key=value config files and family spec strings.
//!
//! A sample table starts with one line of JSON, `{"n": 1, "M": 8, "N": 1024}`,
//! optionally with `"encoding": "f64le"`. Text tables follow with one
//! `re im` pair per line (`#` comments and blank lines skipped); binary tables
//! follow with interleaved little-endian `f64` pairs.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponent::{parse_rational, ExtendedExponent};
use crate::grid::{GridSpec, SampledFunction};
use crate::testbed::Family;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Encoding {
    #[default]
    Text,
    F64le,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableHeader {
    pub n: usize,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub size: usize,
    #[serde(default)]
    pub encoding: Encoding,
}

fn format_err(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

pub fn read_samples(mut reader: impl BufRead) -> Result<SampledFunction> {
    let mut line = String::new();
    reader.read_line(&mut line).map_err(|e| format_err(e.to_string()))?;
    let header: TableHeader =
        serde_json::from_str(line.trim()).map_err(|e| format_err(format!("table header: {e}")))?;
    let grid = GridSpec::new(header.n, header.m, header.size)?;
    let values = match header.encoding {
        Encoding::Text => {
            let mut values = Vec::with_capacity(grid.len());
            for (no, line) in reader.lines().enumerate() {
                let line = line.map_err(|e| format_err(e.to_string()))?;
                let body = line.split('#').next().unwrap_or("").trim();
                if body.is_empty() {
                    continue;
                }
                let mut parts = body.split(|c: char| c.is_whitespace() || c == ',').filter(|s| !s.is_empty());
                let mut num = || -> Result<f64> {
                    parts
                        .next()
                        .unwrap_or("0")
                        .parse()
                        .map_err(|_| format_err(format!("line {}: bad number in {body:?}", no + 2)))
                };
                let (re, im) = (num()?, num()?);
                if parts.next().is_some() {
                    return Err(format_err(format!("line {}: more than two columns", no + 2)));
                }
                values.push(Complex64::new(re, im));
            }
            values
        }
        Encoding::F64le => {
            let mut bytes = Vec::new();
            reader.read_to_end(&mut bytes).map_err(|e| format_err(e.to_string()))?;
            if bytes.len() % 16 != 0 {
                return Err(format_err(format!("{} payload bytes is not a whole number of pairs", bytes.len())));
            }
            bytes
                .chunks_exact(16)
                .map(|c| {
                    let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
                    let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
                    Complex64::new(re, im)
                })
                .collect()
        }
    };
    SampledFunction::new(grid, values)
}

pub fn write_samples(f: &SampledFunction, encoding: Encoding, mut out: impl Write) -> Result<()> {
    let g = f.grid();
    let header = TableHeader {
        n: g.dim(),
        m: g.period_multiplier(),
        size: g.samples_per_axis(),
        encoding,
    };
    let io = |e: std::io::Error| format_err(e.to_string());
    writeln!(out, "{}", serde_json::to_string(&header).expect("header")).map_err(io)?;
    match encoding {
        Encoding::Text => {
            for v in f.values() {
                writeln!(out, "{:e} {:e}", v.re, v.im).map_err(io)?;
            }
        }
        Encoding::F64le => {
            for v in f.values() {
                out.write_all(&v.re.to_le_bytes()).map_err(io)?;
                out.write_all(&v.im.to_le_bytes()).map_err(io)?;
            }
        }
    }
    Ok(())
}

/// `key = value` lines; `#` starts a comment. Later keys win.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format_err(format!("config line {}: expected key=value, got {raw:?}", no + 1)))?;
        let key = k.trim();
        if key.is_empty() {
            return Err(format_err(format!("config line {}: empty key", no + 1)));
        }
        out.insert(key.to_string(), v.trim().to_string());
    }
    Ok(out)
}

/// `power q=2 N=256`, `bracket alpha=-1`, `single-mode ell=3`, `log-power delta=1 q=2`.
/// Returns the family and the cutoff `N` (if given).
pub fn parse_family_spec(spec: &str) -> Result<(Family, Option<usize>)> {
    let mut words = spec.split_whitespace();
    let tag = words.next().ok_or_else(|| format_err("empty family spec"))?;
    let mut keys = BTreeMap::new();
    for w in words {
        let (k, v) = w
            .split_once('=')
            .ok_or_else(|| format_err(format!("family parameter {w:?} is not key=value")))?;
        keys.insert(k, v);
    }
    let mut take = |k: &str| keys.remove(k);
    fn need<'a>(v: Option<&'a str>, k: &str) -> Result<&'a str> {
        v.ok_or_else(|| format_err(format!("missing {k}=...")))
    }
    let exponent = |v: &str| v.parse::<ExtendedExponent>();
    let cutoff = take("N")
        .map(|v| v.parse::<usize>().map_err(|_| format_err(format!("N={v} is not a count"))))
        .transpose()?;
    let family = match tag {
        "single-mode" => Family::SingleMode {
            ell: need(take("ell"), "ell")?
                .split(',')
                .map(|x| x.trim().parse::<i64>().map_err(|_| format_err(format!("ell component {x:?}"))))
                .collect::<Result<_>>()?,
        },
        "power" => Family::Power {
            q: exponent(need(take("q"), "q")?)?,
        },
        "log-ray" => Family::LogRay,
        "bracket" => Family::Bracket {
            alpha: parse_rational(need(take("alpha"), "alpha")?)?,
        },
        "log-power" => Family::LogPower {
            delta: need(take("delta"), "delta")?
                .parse()
                .map_err(|_| format_err("delta is not a number"))?,
            q: exponent(need(take("q"), "q")?)?,
        },
        "constant" => Family::Constant,
        other => return Err(format_err(format!("unknown family {other:?}"))),
    };
    if let Some(k) = keys.keys().next() {
        return Err(format_err(format!("{tag} takes no parameter {k:?}")));
    }
    Ok((family, cutoff))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponent::rat;
    use crate::testbed::modulated_gaussian;

    #[test]
    fn text_and_binary_round_trip() {
        let grid = GridSpec::new(1, 2, 64).unwrap();
        let f = modulated_gaussian(grid, 0.7, [1.0, 0.0]);
        for enc in [Encoding::Text, Encoding::F64le] {
            let mut buf = Vec::new();
            write_samples(&f, enc, &mut buf).unwrap();
            let back = read_samples(buf.as_slice()).unwrap();
            assert_eq!(back, f);
        }
    }

    #[test]
    fn text_table_details() {
        let text = "{\"n\": 1, \"M\": 1, \"N\": 4}\n# comment\n1 0\n0.5, -1\n\n2\n3 4 # tail\n";
        let f = read_samples(text.as_bytes()).unwrap();
        assert_eq!(f.values()[1], Complex64::new(0.5, -1.0));
        assert_eq!(f.values()[2], Complex64::new(2.0, 0.0));
        let short = "{\"n\": 1, \"M\": 1, \"N\": 4}\n1 0\n";
        assert!(matches!(read_samples(short.as_bytes()), Err(Error::SizeMismatch { .. })));
        assert!(read_samples("{\"n\": 1}\n".as_bytes()).is_err());
        assert!(read_samples("{\"n\":1,\"M\":1,\"N\":4}\n1 2 3\n".as_bytes()).is_err());
    }

    #[test]
    fn config_lines() {
        let c = parse_config("s = 4/3\n# skip\np=inf # trailing\n\ns=1\n").unwrap();
        assert_eq!(c["s"], "1");
        assert_eq!(c["p"], "inf");
        assert!(parse_config("novalue\n").is_err());
        assert!(parse_config("=3\n").is_err());
    }

    #[test]
    fn family_specs() {
        let (f, n) = parse_family_spec("power q=2 N=256").unwrap();
        assert_eq!(f, Family::Power { q: ExtendedExponent::two() });
        assert_eq!(n, Some(256));
        let (f, _) = parse_family_spec("bracket alpha=-1/2").unwrap();
        assert_eq!(f, Family::Bracket { alpha: rat(-1, 2) });
        let (f, n) = parse_family_spec("single-mode ell=3,-1").unwrap();
        assert_eq!(f, Family::SingleMode { ell: vec![3, -1] });
        assert_eq!(n, None);
        assert!(parse_family_spec("power").is_err());
        assert!(parse_family_spec("constant q=2").is_err());
        assert!(parse_family_spec("wavelet").is_err());
    }
}
