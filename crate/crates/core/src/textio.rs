//! Line-oriented text format for stacks of complex matrices.
//!
//! ```text
//! # oobmm matrix v1
//! # band mmwave
//! # seed 42
//! # blocks 63
//! # rows 32
//! # cols 32
//! 1.25e-1 -3.5e-2
//! ...
//! ```
//!
//! Free-form `# key value` header lines come first; `blocks`, `rows` and
//! `cols` are required. One entry per line as `re im`, blocks in order, each
//! block row-major. Floats print in shortest round-trip form, so a write/read
//! cycle is exact.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub const MATRIX_MAGIC: &str = "# oobmm matrix v1";

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixFile {
    /// Extra header entries in file order.
    pub header: Vec<(String, String)>,
    pub blocks: Vec<DMatrix<Complex64>>,
}

impl MatrixFile {
    pub fn single(header: Vec<(String, String)>, m: DMatrix<Complex64>) -> Self {
        Self { header, blocks: vec![m] }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.header.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn to_text(&self) -> Result<String> {
        let (rows, cols) = self.blocks.first().map_or((0, 0), |b| b.shape());
        if self.blocks.iter().any(|b| b.shape() != (rows, cols)) {
            return Err(Error::Config("all blocks must share one shape".into()));
        }
        let mut s = String::from(MATRIX_MAGIC);
        s.push('\n');
        for (k, v) in &self.header {
            if k.is_empty() || k.contains(char::is_whitespace) || v.contains('\n') || ["blocks", "rows", "cols"].contains(&k.as_str()) {
                return Err(Error::Config(format!("invalid header entry '{k}'")));
            }
            let _ = writeln!(s, "# {k} {v}");
        }
        let _ = writeln!(s, "# blocks {}\n# rows {rows}\n# cols {cols}", self.blocks.len());
        for b in &self.blocks {
            for r in 0..rows {
                for c in 0..cols {
                    let z = b[(r, c)];
                    let _ = writeln!(s, "{:e} {:e}", z.re, z.im);
                }
            }
        }
        Ok(s)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let err = |line: usize, message: String| Error::Parse { line, message };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        match lines.next() {
            Some((_, l)) if l == MATRIX_MAGIC => {}
            _ => return Err(err(1, format!("expected '{MATRIX_MAGIC}'"))),
        }
        let mut header = Vec::new();
        let (mut blocks, mut rows, mut cols) = (None, None, None);
        let mut values = Vec::new();
        for (n, l) in lines {
            if l.is_empty() {
                continue;
            }
            if let Some(rest) = l.strip_prefix('#') {
                if !values.is_empty() {
                    return Err(err(n, "header line after data".into()));
                }
                let rest = rest.trim();
                let (k, v) = rest.split_once(char::is_whitespace).unwrap_or((rest, ""));
                let v = v.trim();
                let count = || v.parse::<usize>().map_err(|_| err(n, format!("'{k}' needs a non-negative integer")));
                match k {
                    "blocks" => blocks = Some(count()?),
                    "rows" => rows = Some(count()?),
                    "cols" => cols = Some(count()?),
                    _ => header.push((k.to_string(), v.to_string())),
                }
                continue;
            }
            let mut it = l.split_whitespace();
            let mut num = || -> Result<f64> {
                it.next().and_then(|t| t.parse::<f64>().ok()).ok_or_else(|| err(n, format!("expected 're im', got '{l}'")))
            };
            let z = Complex64::new(num()?, num()?);
            if it.next().is_some() {
                return Err(err(n, format!("expected 're im', got '{l}'")));
            }
            values.push((n, z));
        }
        let last = text.lines().count();
        let missing = |k: &str| err(last, format!("missing '# {k}' header"));
        let (b, r, c) =
            (blocks.ok_or_else(|| missing("blocks"))?, rows.ok_or_else(|| missing("rows"))?, cols.ok_or_else(|| missing("cols"))?);
        if values.len() != b * r * c {
            return Err(err(last, format!("expected {} entries for {b} blocks of {r}x{c}, found {}", b * r * c, values.len())));
        }
        let blocks = values
            .chunks(r * c.max(1))
            .take(b)
            .map(|chunk| DMatrix::from_row_iterator(r, c, chunk.iter().map(|(_, z)| *z)))
            .collect::<Vec<_>>();
        let blocks = if r * c == 0 { vec![DMatrix::zeros(r, c); b] } else { blocks };
        Ok(Self { header, blocks })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{complex_normal, seeded};
    use proptest::prelude::*;

    #[test]
    fn layout_is_row_major() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0].map(|x| Complex64::new(x, -x)));
        let f = MatrixFile::single(vec![("band".into(), "sub6".into())], m);
        let t = f.to_text().unwrap();
        let data: Vec<&str> = t.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(data, ["1e0 -1e0", "2e0 -2e0", "3e0 -3e0", "4e0 -4e0"]);
        assert!(t.contains("# band sub6\n# blocks 1\n# rows 2\n# cols 2\n"));
    }

    #[test]
    fn round_trip_is_exact() {
        let mut rng = seeded(9);
        let blocks = (0..3).map(|_| DMatrix::from_fn(4, 5, |_, _| complex_normal(&mut rng, 1.0))).collect();
        let f = MatrixFile { header: vec![("seed".into(), "9".into()), ("note".into(), "two words".into())], blocks };
        let back = MatrixFile::from_text(&f.to_text().unwrap()).unwrap();
        assert_eq!(back, f);
        assert_eq!(back.get("note"), Some("two words"));
    }

    #[test]
    fn malformed_inputs_name_the_line() {
        assert!(matches!(MatrixFile::from_text("nope"), Err(Error::Parse { line: 1, .. })));
        let bad = format!("{MATRIX_MAGIC}\n# blocks 1\n# rows 1\n# cols 2\n1 2\n3 x\n");
        assert!(matches!(MatrixFile::from_text(&bad), Err(Error::Parse { line: 6, .. })));
        let short = format!("{MATRIX_MAGIC}\n# blocks 1\n# rows 1\n# cols 2\n1 2\n");
        assert!(matches!(MatrixFile::from_text(&short), Err(Error::Parse { .. })));
        let no_rows = format!("{MATRIX_MAGIC}\n# blocks 1\n# cols 1\n1 2\n");
        assert!(MatrixFile::from_text(&no_rows).unwrap_err().to_string().contains("rows"));
        let reserved = MatrixFile::single(vec![("rows".into(), "3".into())], DMatrix::zeros(1, 1));
        assert!(reserved.to_text().is_err());
    }

    proptest! {
        #[test]
        fn any_finite_entries_round_trip(re in proptest::collection::vec(-1e300f64..1e300, 6), im in proptest::collection::vec(-1e-300f64..1e-300, 6)) {
            let m = DMatrix::from_fn(2, 3, |r, c| Complex64::new(re[r * 3 + c], im[r * 3 + c]));
            let f = MatrixFile::single(vec![], m);
            prop_assert_eq!(MatrixFile::from_text(&f.to_text().unwrap()).unwrap(), f);
        }
    }
}
