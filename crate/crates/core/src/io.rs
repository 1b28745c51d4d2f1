//! Field serialization.
//!
//! CSV: a header `# nx ny x0 x1 y0 y1` then one `x,y,value` row per node in
//! storage order. Binary: magic `EPX1`, `nx` and `ny` as little-endian `u32`,
//! the four corners as `f64`, then `nx·ny` values as `f64`, all little-endian.

use std::io::{BufRead, Read, Write};

use crate::error::{Error, Result};
use crate::grid::{Field, Grid2D};

pub const BINARY_MAGIC: &[u8; 4] = b"EPX1";

pub fn write_csv<W: Write>(field: &Field, mut w: W) -> Result<()> {
    let g = field.grid();
    let (x0, x1, y0, y1) = g.corners();
    writeln!(w, "# {} {} {} {} {} {}", g.nx(), g.ny(), x0, x1, y0, y1)?;
    for j in 0..g.ny() {
        for i in 0..g.nx() {
            writeln!(w, "{},{},{}", g.x(i), g.y(j), field.at(i, j))?;
        }
    }
    Ok(())
}

pub fn read_csv<R: BufRead>(r: R) -> Result<Field> {
    let mut lines = r.lines();
    let header = lines.next().ok_or_else(|| Error::Format("empty CSV field".into()))??;
    let rest = header
        .strip_prefix('#')
        .ok_or_else(|| Error::Format(format!("missing `#` header, got `{header}`")))?;
    let parts: Vec<&str> = rest.split_whitespace().collect();
    if parts.len() != 6 {
        return Err(Error::Format(format!("header needs 6 entries, got {}", parts.len())));
    }
    let nx: usize = parse(parts[0])?;
    let ny: usize = parse(parts[1])?;
    let c: Vec<f64> = parts[2..].iter().map(|p| parse(p)).collect::<Result<_>>()?;
    let grid = Grid2D::new(nx, ny, c[0], c[1], c[2], c[3])?;
    let mut values = Vec::with_capacity(grid.len());
    for line in lines {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let value = line
            .rsplit(',')
            .next()
            .ok_or_else(|| Error::Format(format!("bad row `{line}`")))?;
        values.push(parse(value)?);
    }
    Field::from_values(grid, values)
}

fn parse<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.trim().parse().map_err(|_| Error::Format(format!("cannot parse `{s}`")))
}

pub fn write_binary<W: Write>(field: &Field, mut w: W) -> Result<()> {
    let g = field.grid();
    let (x0, x1, y0, y1) = g.corners();
    let mut buf = Vec::with_capacity(4 + 8 + 32 + 8 * g.len());
    buf.extend_from_slice(BINARY_MAGIC);
    buf.extend_from_slice(&(g.nx() as u32).to_le_bytes());
    buf.extend_from_slice(&(g.ny() as u32).to_le_bytes());
    for c in [x0, x1, y0, y1] {
        buf.extend_from_slice(&c.to_le_bytes());
    }
    for v in field.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_binary<R: Read>(mut r: R) -> Result<Field> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() < 44 || &bytes[..4] != BINARY_MAGIC {
        return Err(Error::Format("missing EPX1 header".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let (nx, ny) = (u32_at(4), u32_at(8));
    let grid = Grid2D::new(nx, ny, f64_at(12), f64_at(20), f64_at(28), f64_at(36))?;
    let expected = 44 + 8 * grid.len();
    if bytes.len() != expected {
        return Err(Error::Format(format!(
            "binary field of {nx}x{ny} needs {expected} bytes, got {}",
            bytes.len()
        )));
    }
    let values = (0..grid.len()).map(|k| f64_at(44 + 8 * k)).collect();
    Field::from_values(grid, values)
}

/// Reads either format, sniffing the binary magic.
pub fn read_field_file(path: &std::path::Path) -> Result<Field> {
    let bytes = std::fs::read(path)?;
    if bytes.starts_with(BINARY_MAGIC) {
        read_binary(&bytes[..])
    } else {
        read_csv(&bytes[..])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample(nx: usize, ny: usize, a: f64) -> Field {
        let g = Grid2D::new(nx, ny, -0.3, 1.7, 2.0, 2.5).unwrap();
        Field::from_fn(g, |x, y| a * (3.1 * x).sin() * y.exp() + 1e-300)
    }

    #[test]
    fn binary_layout() {
        let f = sample(5, 6, 1.0);
        let mut buf = Vec::new();
        write_binary(&f, &mut buf).unwrap();
        assert_eq!(&buf[..4], b"EPX1");
        assert_eq!(u32::from_le_bytes(buf[4..8].try_into().unwrap()), 5);
        assert_eq!(u32::from_le_bytes(buf[8..12].try_into().unwrap()), 6);
        assert_eq!(f64::from_le_bytes(buf[12..20].try_into().unwrap()), -0.3);
        assert_eq!(buf.len(), 44 + 8 * 30);
        assert_eq!(f64::from_le_bytes(buf[44..52].try_into().unwrap()), f.at(0, 0));
        assert_eq!(f64::from_le_bytes(buf[52..60].try_into().unwrap()), f.at(1, 0));
    }

    #[test]
    fn csv_header_and_rows() {
        let f = sample(5, 5, 2.0);
        let mut buf = Vec::new();
        write_csv(&f, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "# 5 5 -0.3 1.7 2 2.5");
        assert_eq!(lines.count(), 25);
    }

    #[test]
    fn rejects_truncated_binary() {
        let f = sample(5, 5, 1.0);
        let mut buf = Vec::new();
        write_binary(&f, &mut buf).unwrap();
        buf.pop();
        assert!(read_binary(&buf[..]).is_err());
        assert!(read_binary(&b"NOPE"[..]).is_err());
    }

    proptest! {
        #[test]
        fn both_formats_roundtrip_bit_exact(nx in 5usize..12, ny in 5usize..12, a in -1e6f64..1e6) {
            let f = sample(nx, ny, a);
            let mut bin = Vec::new();
            write_binary(&f, &mut bin).unwrap();
            prop_assert_eq!(read_binary(&bin[..]).unwrap(), f.clone());
            let mut csv = Vec::new();
            write_csv(&f, &mut csv).unwrap();
            let back = read_csv(&csv[..]).unwrap();
            prop_assert_eq!(back.grid(), f.grid());
            for (p, q) in back.values().iter().zip(f.values()) {
                prop_assert_eq!(p.to_bits(), q.to_bits());
            }
        }
    }
}
