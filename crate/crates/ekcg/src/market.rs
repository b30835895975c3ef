//! Matrix Market coordinate I/O for SPD matrices.
//!
//! Reads `real symmetric` and `real general` coordinate files (1-based
//! indices). General input is mirrored into full symmetric storage; mirror
//! values that disagree by more than `1e-14` relative are rejected. The
//! writer emits the lower triangle in `symmetric` format with 17 significant
//! digits, so a write/read round trip reproduces the matrix exactly.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::sparse::SparseSpd;

const SYM_REL_TOL: f64 = 1e-14;

/// Parse a Matrix Market coordinate file into a validated [`SparseSpd`].
pub fn load_matrix_market<P: AsRef<Path>>(path: P) -> Result<SparseSpd> {
    let file = File::open(path.as_ref())?;
    read_matrix_market(BufReader::new(file))
}

/// Parse Matrix Market data from any reader.
pub fn read_matrix_market<R: BufRead>(reader: R) -> Result<SparseSpd> {
    let mut lines = reader.lines().enumerate();

    let (lineno, header) = match lines.next() {
        Some((i, l)) => (i + 1, l?),
        None => {
            return Err(Error::Parse {
                line: 0,
                message: "empty file".into(),
            })
        }
    };
    let fields: Vec<String> = header.split_whitespace().map(|s| s.to_lowercase()).collect();
    if fields.len() < 5
        || fields[0] != "%%matrixmarket"
        || fields[1] != "matrix"
        || fields[2] != "coordinate"
    {
        return Err(Error::Parse {
            line: lineno,
            message: "expected header '%%MatrixMarket matrix coordinate real symmetric|general'"
                .into(),
        });
    }
    if fields[3] != "real" {
        return Err(Error::Parse {
            line: lineno,
            message: format!("unsupported field type '{}', only 'real'", fields[3]),
        });
    }
    let symmetric = match fields[4].as_str() {
        "symmetric" => true,
        "general" => false,
        other => {
            return Err(Error::Parse {
                line: lineno,
                message: format!("unsupported symmetry '{other}', only symmetric|general"),
            })
        }
    };

    // Size line: first non-comment, non-blank line.
    let mut size: Option<(usize, usize, usize)> = None;
    let mut entries: Vec<(usize, usize, f64)> = Vec::new();
    for (i, line) in lines {
        let lineno = i + 1;
        let line = line?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('%') {
            continue;
        }
        let parts: Vec<&str> = text.split_whitespace().collect();
        match size {
            None => {
                if parts.len() != 3 {
                    return Err(Error::Parse {
                        line: lineno,
                        message: "size line must be 'rows cols nnz'".into(),
                    });
                }
                let rows = parse_usize(parts[0], lineno)?;
                let cols = parse_usize(parts[1], lineno)?;
                let nnz = parse_usize(parts[2], lineno)?;
                if rows != cols {
                    return Err(Error::Parse {
                        line: lineno,
                        message: format!("matrix must be square, got {rows}x{cols}"),
                    });
                }
                size = Some((rows, cols, nnz));
                entries.reserve(nnz);
            }
            Some((rows, _, _)) => {
                if parts.len() != 3 {
                    return Err(Error::Parse {
                        line: lineno,
                        message: "entry line must be 'i j value'".into(),
                    });
                }
                let i1 = parse_usize(parts[0], lineno)?;
                let j1 = parse_usize(parts[1], lineno)?;
                let v: f64 = parts[2].parse().map_err(|_| Error::Parse {
                    line: lineno,
                    message: format!("bad value '{}'", parts[2]),
                })?;
                if i1 == 0 || j1 == 0 || i1 > rows || j1 > rows {
                    return Err(Error::Parse {
                        line: lineno,
                        message: format!("index ({i1},{j1}) outside 1..={rows}"),
                    });
                }
                entries.push((i1 - 1, j1 - 1, v));
            }
        }
    }
    let (n, _, nnz) = size.ok_or(Error::Parse {
        line: 0,
        message: "missing size line".into(),
    })?;
    if entries.len() != nnz {
        return Err(Error::Parse {
            line: 0,
            message: format!("size line promised {nnz} entries, found {}", entries.len()),
        });
    }

    symmetrize(n, entries, symmetric)
}

/// Mirror stored entries into full symmetric storage and validate.
fn symmetrize(n: usize, entries: Vec<(usize, usize, f64)>, _symmetric: bool) -> Result<SparseSpd> {
    use std::collections::HashMap;
    let mut map: HashMap<(usize, usize), f64> = HashMap::with_capacity(2 * entries.len());
    for (i, j, v) in entries {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        match map.get(&(a, b)) {
            None => {
                map.insert((a, b), v);
            }
            Some(&prev) => {
                // The mirror (or a duplicate) was stored explicitly; values
                // must agree to 1e-14 relative, and we keep the first.
                let scale = prev.abs().max(v.abs());
                if (prev - v).abs() > SYM_REL_TOL * scale {
                    return Err(Error::InvalidMatrix(format!(
                        "asymmetric values at ({},{}): {prev} vs {v}",
                        a + 1,
                        b + 1
                    )));
                }
            }
        }
    }
    let mut full = Vec::with_capacity(2 * map.len());
    for (&(i, j), &v) in map.iter() {
        full.push((i, j, v));
        if i != j {
            full.push((j, i, v));
        }
    }
    SparseSpd::from_entries(n, &full, SYM_REL_TOL)
}

fn parse_usize(s: &str, line: usize) -> Result<usize> {
    s.parse().map_err(|_| Error::Parse {
        line,
        message: format!("bad integer '{s}'"),
    })
}

/// Write the lower triangle in `real symmetric` coordinate format with 17
/// significant digits (exact round trip for f64).
pub fn write_matrix_market<P: AsRef<Path>>(path: P, a: &SparseSpd) -> Result<()> {
    let file = File::create(path.as_ref())?;
    let mut w = BufWriter::new(file);
    dump_matrix_market(&mut w, a)
}

/// Write to any writer; see [`write_matrix_market`].
pub fn dump_matrix_market<W: Write>(w: &mut W, a: &SparseSpd) -> Result<()> {
    let n = a.n();
    let lower: Vec<(usize, usize, f64)> = (0..n)
        .flat_map(|i| {
            (a.row_ptr()[i]..a.row_ptr()[i + 1])
                .filter(move |&idx| a.col_idx()[idx] <= i)
                .map(move |idx| (i, a.col_idx()[idx], a.vals()[idx]))
        })
        .collect();
    writeln!(w, "%%MatrixMarket matrix coordinate real symmetric")?;
    writeln!(w, "{} {} {}", n, n, lower.len())?;
    for (i, j, v) in lower {
        writeln!(w, "{} {} {:.16e}", i + 1, j + 1, v)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::gen_poisson2d;
    use std::io::Cursor;

    fn parse(text: &str) -> Result<SparseSpd> {
        read_matrix_market(Cursor::new(text.as_bytes()))
    }

    #[test]
    fn symmetric_header_mirrors_entries() {
        let a = parse(
            "%%MatrixMarket matrix coordinate real symmetric\n\
             2 2 3\n\
             1 1 4.0\n\
             2 2 3.0\n\
             2 1 1.0\n",
        )
        .unwrap();
        assert_eq!(a.nnz(), 4);
        assert_eq!(a.get(0, 1), Some(1.0));
        assert_eq!(a.get(1, 0), Some(1.0));
    }

    #[test]
    fn general_header_requires_consistent_mirrors() {
        let a = parse(
            "%%MatrixMarket matrix coordinate real general\n\
             2 2 4\n\
             1 1 4.0\n\
             2 2 3.0\n\
             1 2 1.0\n\
             2 1 1.0\n",
        )
        .unwrap();
        assert_eq!(a.nnz(), 4);

        let err = parse(
            "%%MatrixMarket matrix coordinate real general\n\
             2 2 4\n\
             1 1 4.0\n\
             2 2 3.0\n\
             1 2 1.0\n\
             2 1 1.5\n",
        )
        .unwrap_err();
        assert!(err.to_string().contains("asymmetric values"));
    }

    #[test]
    fn nonpositive_diagonal_rejected() {
        let err = parse(
            "%%MatrixMarket matrix coordinate real symmetric\n\
             1 1 1\n\
             1 1 -1.0\n",
        )
        .unwrap_err();
        assert!(err.to_string().contains("nonpositive diagonal"));
    }

    #[test]
    fn round_trip_is_exact() {
        let a = gen_poisson2d(3);
        let mut buf = Vec::new();
        dump_matrix_market(&mut buf, &a).unwrap();
        let b = read_matrix_market(Cursor::new(&buf)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse("not a matrix\n").is_err());
        assert!(parse("%%MatrixMarket matrix coordinate complex symmetric\n1 1 1\n1 1 2.0\n")
            .is_err());
        assert!(parse("%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n3 1 2.0\n").is_err());
    }
}
