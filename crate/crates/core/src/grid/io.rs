use std::io::{self, BufRead, Write};

use super::{Grid, ScalarField};
use crate::error::Error;

/// Maximum grey level written to PGM snapshots.
const PGM_MAX: u32 = 65535;

/// Linear map between grey levels and field values of a snapshot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PgmScale {
    pub min: f64,
    pub max: f64,
}

impl PgmScale {
    /// Sidecar line: `value = min + level * (max - min) / 65535`.
    pub fn sidecar_line(&self) -> String {
        format!("min={} max={} levels={}", self.min, self.max, PGM_MAX)
    }

    pub fn value_of(&self, level: u32) -> f64 {
        self.min + level as f64 * (self.max - self.min) / PGM_MAX as f64
    }
}

/// Writes a plain-text (P2) graymap. Row 0 of the image is the top of the
/// domain. `comments` go after the magic number, each prefixed by `# `.
pub fn write_pgm<W: Write>(mut out: W, field: &ScalarField, comments: &[String]) -> io::Result<PgmScale> {
    let grid = field.grid();
    let values = field.values();
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scale = PgmScale { min, max };
    let span = max - min;

    writeln!(out, "P2")?;
    for c in comments {
        writeln!(out, "# {c}")?;
    }
    writeln!(out, "{} {}", grid.nx(), grid.ny())?;
    writeln!(out, "{PGM_MAX}")?;
    for j in (0..grid.ny()).rev() {
        let row: Vec<String> = (0..grid.nx())
            .map(|i| {
                let v = values[grid.index(i, j)];
                let level = if span > 0.0 && span.is_finite() {
                    ((v - min) / span * PGM_MAX as f64).round() as u32
                } else {
                    0
                };
                level.to_string()
            })
            .collect();
        writeln!(out, "{}", row.join(" "))?;
    }
    Ok(scale)
}

/// Writes `x[,y],value` rows at cell centres after `#` comment lines.
pub fn write_field_csv<W: Write>(mut out: W, field: &ScalarField, comments: &[String]) -> io::Result<()> {
    let grid = field.grid();
    for c in comments {
        writeln!(out, "# {c}")?;
    }
    if grid.dim() == 2 {
        writeln!(out, "x,y,value")?;
    } else {
        writeln!(out, "x,value")?;
    }
    for j in 0..grid.ny() {
        for i in 0..grid.nx() {
            let (x, y) = grid.center(i, j);
            let v = field.values()[grid.index(i, j)];
            if grid.dim() == 2 {
                writeln!(out, "{x},{y},{v}")?;
            } else {
                writeln!(out, "{x},{v}")?;
            }
        }
    }
    Ok(())
}

/// Reads a field written by [`write_field_csv`]. Rows must appear in storage
/// order; the last column holds the value.
pub fn read_field_csv<R: BufRead>(input: R, grid: Grid) -> Result<ScalarField, Error> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut values = Vec::with_capacity(grid.len());
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::InvalidGrid(format!("csv row {row}: {e}")))?;
        if record.len() != grid.dim() + 1 {
            return Err(Error::InvalidGrid(format!(
                "csv row {row} has {} columns, expected {}",
                record.len(),
                grid.dim() + 1
            )));
        }
        let v: f64 = record[grid.dim()]
            .parse()
            .map_err(|e| Error::InvalidGrid(format!("csv row {row}: {e}")))?;
        values.push(v);
    }
    ScalarField::from_values(grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_layout_and_scale() {
        let g = Grid::new_2d(1.0, 1.0, 3, 4).unwrap();
        let f = ScalarField::from_fn(g, |x, y| x + 10.0 * y);
        let mut buf = Vec::new();
        let scale = write_pgm(&mut buf, &f, &["hello".into()]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "P2");
        assert_eq!(lines[1], "# hello");
        assert_eq!(lines[2], "3 4");
        assert_eq!(lines[3], "65535");
        assert_eq!(lines.len(), 4 + 4);
        // Top row is the largest y, its last entry the global maximum.
        assert!(lines[4].ends_with("65535"));
        assert!(lines[7].starts_with("0 "));
        assert_eq!(scale.value_of(65535), scale.max);
        assert!(scale.sidecar_line().starts_with("min="));
    }

    #[test]
    fn csv_round_trip() {
        let g = Grid::new_2d(2.0, 1.0, 4, 3).unwrap();
        let f = ScalarField::from_fn(g, |x, y| x.sin() * y + 0.1);
        let mut buf = Vec::new();
        write_field_csv(&mut buf, &f, &["config".into()]).unwrap();
        let back = read_field_csv(&buf[..], g).unwrap();
        assert_eq!(back, f);

        let g1 = Grid::new_1d(1.0, 5).unwrap();
        assert!(read_field_csv(&buf[..], g1).is_err());
    }
}
