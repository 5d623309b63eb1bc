//! File formats: point CSV, binary PGM, radial and histogram tables.
//!
//! Floating-point values are written as `{:.16e}` (17 significant digits),
//! which round-trips every `f64` exactly. Spectrum images map lattice
//! frequency `k = (c − K, r − K)` to pixel column `c`, row `r`.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::losses::{PcfHistogram, PcfSettings, RadialProfile, RadialTable, TargetSpectrum, ImageTask};
use crate::{Error, PointSet, Result};

fn float(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_float(s: &str, what: &str, line: usize) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::load(format!("line {line}: malformed {what} '{}'", s.trim())))
}

/// Writes `dim0,dim1,…` followed by one row per point.
pub fn write_points_csv(mut out: impl Write, points: &PointSet) -> Result<()> {
    let header: Vec<String> = (0..points.dim()).map(|d| format!("dim{d}")).collect();
    writeln!(out, "{}", header.join(","))?;
    for p in points.points() {
        let row: Vec<String> = p.iter().map(|v| float(*v)).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn read_points_csv(input: impl Read) -> Result<PointSet> {
    let mut lines = BufReader::new(input).lines();
    let header = lines.next().ok_or_else(|| Error::load("empty point file"))??;
    let dim = header.split(',').count();
    let expected: Vec<String> = (0..dim).map(|d| format!("dim{d}")).collect();
    if header.trim() != expected.join(",") {
        return Err(Error::load(format!("point file header '{header}' is not dim0,dim1,…")));
    }
    let mut coords = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != dim {
            return Err(Error::load(format!("line {}: expected {dim} values", i + 2)));
        }
        for f in fields {
            coords.push(parse_float(f, "coordinate", i + 2)?);
        }
    }
    PointSet::new(dim, coords).map_err(|e| Error::load(e.to_string()))
}

pub fn save_points(path: &Path, points: &PointSet) -> Result<()> {
    let mut buf = Vec::new();
    write_points_csv(&mut buf, points)?;
    fs::write(path, buf)?;
    Ok(())
}

pub fn load_points(path: &Path) -> Result<PointSet> {
    read_points_csv(fs::File::open(path)?)
}

/// Grayscale raster read from a binary PGM (`P5`); 8-bit or 16-bit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pgm {
    pub width: usize,
    pub height: usize,
    pub max_value: u16,
    /// Row-major, top row first.
    pub pixels: Vec<u16>,
}

impl Pgm {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n{}\n", self.width, self.height, self.max_value).into_bytes();
        if self.max_value < 256 {
            out.extend(self.pixels.iter().map(|p| *p as u8));
        } else {
            out.extend(self.pixels.iter().flat_map(|p| p.to_be_bytes()));
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut at = 0;
        let mut tokens = Vec::new();
        while tokens.len() < 4 {
            while at < bytes.len() && bytes[at].is_ascii_whitespace() {
                at += 1;
            }
            if at < bytes.len() && bytes[at] == b'#' {
                while at < bytes.len() && bytes[at] != b'\n' {
                    at += 1;
                }
                continue;
            }
            let start = at;
            while at < bytes.len() && !bytes[at].is_ascii_whitespace() {
                at += 1;
            }
            if start == at {
                return Err(Error::load("truncated PGM header"));
            }
            tokens.push(String::from_utf8_lossy(&bytes[start..at]).into_owned());
        }
        at += 1;
        if tokens[0] != "P5" {
            return Err(Error::load(format!("not a binary PGM (magic '{}')", tokens[0])));
        }
        let num = |s: &str| s.parse::<usize>().map_err(|_| Error::load(format!("bad PGM header field '{s}'")));
        let (width, height, max) = (num(&tokens[1])?, num(&tokens[2])?, num(&tokens[3])?);
        if width == 0 || height == 0 || max == 0 || max > 65535 {
            return Err(Error::load("PGM size or maximum value out of range"));
        }
        let wide = max > 255;
        let need = width * height * if wide { 2 } else { 1 };
        let data = bytes.get(at..at + need).ok_or_else(|| Error::load("truncated PGM data"))?;
        let pixels: Vec<u16> = if wide {
            data.chunks(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect()
        } else {
            data.iter().map(|b| u16::from(*b)).collect()
        };
        if pixels.iter().any(|p| usize::from(*p) > max) {
            return Err(Error::load("PGM pixel exceeds its maximum value"));
        }
        Ok(Self {
            width,
            height,
            max_value: max as u16,
            pixels,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}

/// Image task from a PGM; texels are pixel values over the maximum value.
pub fn read_image_task(path: &Path) -> Result<ImageTask> {
    let pgm = Pgm::load(path)?;
    let max = f64::from(pgm.max_value);
    ImageTask::new(pgm.width, pgm.height, pgm.pixels.iter().map(|p| f64::from(*p) / max).collect())
}

/// Radial table CSV with columns `r` and `power` (or `mean_power`, so radial
/// profiles written by analysis can serve as targets; empty bins are skipped).
pub fn read_radial_table(input: impl Read) -> Result<RadialTable> {
    let mut lines = BufReader::new(input).lines();
    let header = lines.next().ok_or_else(|| Error::load("empty radial table"))??;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let r_col = cols.iter().position(|c| *c == "r");
    let p_col = cols.iter().position(|c| *c == "power" || *c == "mean_power");
    let (Some(r_col), Some(p_col)) = (r_col, p_col) else {
        return Err(Error::load(format!("radial table header '{header}' lacks r and power columns")));
    };
    let (mut radius, mut power) = (Vec::new(), Vec::new());
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len() {
            return Err(Error::load(format!("line {}: expected {} fields", i + 2, cols.len())));
        }
        if fields[p_col].trim().is_empty() {
            continue;
        }
        radius.push(parse_float(fields[r_col], "radius", i + 2)?);
        power.push(parse_float(fields[p_col], "power", i + 2)?);
    }
    RadialTable::new(radius, power).map_err(|e| Error::load(e.to_string()))
}

pub fn write_radial_table(mut out: impl Write, table: &RadialTable) -> Result<()> {
    writeln!(out, "r,power")?;
    for (r, p) in table.radius().iter().zip(table.power()) {
        writeln!(out, "{},{}", float(*r), float(*p))?;
    }
    Ok(())
}

/// `r,mean_power,anisotropy,count` with `r` the bin centre; empty bins leave
/// the statistics blank.
pub fn write_radial_csv(mut out: impl Write, profile: &RadialProfile) -> Result<()> {
    writeln!(out, "r,mean_power,anisotropy,count")?;
    for b in &profile.bins {
        let opt = |v: Option<f64>| v.map(float).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{}",
            float(0.5 * (b.lo + b.hi)),
            opt(b.mean),
            opt(b.anisotropy),
            b.count
        )?;
    }
    Ok(())
}

/// 16-bit PGM holding a full 2D target: power = pixel / 2^15.
pub fn full_target_to_pgm(extent: usize, power: &[f64]) -> Result<Pgm> {
    let side = 2 * extent + 1;
    if power.len() != side * side {
        return Err(Error::usage("full target size differs from (2K+1)²"));
    }
    let mut pixels = vec![0u16; side * side];
    for k0 in 0..side {
        for k1 in 0..side {
            let v = (power[k0 * side + k1] * 32768.0).round().clamp(0.0, 65535.0);
            pixels[k1 * side + k0] = v as u16;
        }
    }
    Ok(Pgm {
        width: side,
        height: side,
        max_value: 65535,
        pixels,
    })
}

pub fn pgm_to_full_target(pgm: &Pgm) -> Result<TargetSpectrum> {
    if pgm.width != pgm.height || pgm.width % 2 == 0 {
        return Err(Error::load("full spectrum target must be a square PGM of odd side 2K+1"));
    }
    if pgm.max_value != 65535 {
        return Err(Error::load("full spectrum target must be a 16-bit PGM"));
    }
    let side = pgm.width;
    let mut power = vec![0.0; side * side];
    for row in 0..side {
        for col in 0..side {
            power[col * side + row] = f64::from(pgm.pixels[row * side + col]) / 32768.0;
        }
    }
    Ok(TargetSpectrum::Full {
        extent: side / 2,
        power,
    })
}

/// A spectral target file: `.pgm` is a full 2D table, anything else a radial CSV.
pub fn read_spectrum_target(path: &Path) -> Result<TargetSpectrum> {
    if !path.exists() {
        return Err(Error::Config(format!("target file '{}' not found", path.display())));
    }
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("pgm")) {
        pgm_to_full_target(&Pgm::load(path)?)
    } else {
        Ok(TargetSpectrum::Radial(read_radial_table(fs::File::open(path)?)?))
    }
}

/// `# bins=…,r_max=…,h=…` then `r,density` rows at bin centres.
pub fn write_pcf_csv(mut out: impl Write, hist: &PcfHistogram) -> Result<()> {
    let s = &hist.settings;
    writeln!(out, "# bins={},r_max={},h={}", s.bins, float(s.r_max), float(s.bandwidth))?;
    writeln!(out, "r,density")?;
    for (b, d) in hist.density.iter().enumerate() {
        writeln!(out, "{},{}", float(hist.bin_centre(b)), float(*d))?;
    }
    Ok(())
}

pub fn parse_pcf_csv(input: impl Read) -> Result<PcfHistogram> {
    let mut lines = BufReader::new(input).lines();
    let meta = lines.next().ok_or_else(|| Error::load("empty histogram file"))??;
    let meta = meta
        .strip_prefix('#')
        .ok_or_else(|| Error::load("histogram file must start with a '# bins=…,r_max=…,h=…' line"))?;
    let (mut bins, mut r_max, mut h) = (None, None, None);
    for field in meta.split(',') {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| Error::load(format!("malformed histogram metadata '{field}'")))?;
        match key.trim() {
            "bins" => bins = value.trim().parse::<usize>().ok(),
            "r_max" => r_max = Some(parse_float(value, "r_max", 1)?),
            "h" => h = Some(parse_float(value, "bandwidth", 1)?),
            other => return Err(Error::load(format!("unknown histogram metadata key '{other}'"))),
        }
    }
    let (Some(bins), Some(r_max), Some(bandwidth)) = (bins, r_max, h) else {
        return Err(Error::load("histogram metadata needs bins, r_max and h"));
    };
    let header = lines.next().ok_or_else(|| Error::load("histogram file lacks a header row"))??;
    if header.trim() != "r,density" {
        return Err(Error::load(format!("histogram header '{header}' is not r,density")));
    }
    let mut density = Vec::with_capacity(bins);
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (_, d) = line
            .split_once(',')
            .ok_or_else(|| Error::load(format!("line {}: expected r,density", i + 3)))?;
        density.push(parse_float(d, "density", i + 3)?);
    }
    let settings = PcfSettings { bins, r_max, bandwidth };
    PcfHistogram::new(settings, density).map_err(|e| Error::load(e.to_string()))
}

pub fn read_pcf_csv(path: &Path) -> Result<PcfHistogram> {
    if !path.exists() {
        return Err(Error::Config(format!("histogram file '{}' not found", path.display())));
    }
    parse_pcf_csv(fs::File::open(path)?)
}

/// Writes to `path`, or to standard output when `path` is `-`.
pub fn write_output(path: &Path, bytes: &[u8]) -> Result<()> {
    if path.as_os_str() == "-" {
        std::io::stdout().write_all(bytes)?;
    } else {
        fs::write(path, bytes)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samplers::random_points;

    #[test]
    fn points_round_trip_bit_exact() {
        let p = random_points(50, 3, 4).unwrap();
        let mut buf = Vec::new();
        write_points_csv(&mut buf, &p).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("dim0,dim1,dim2\n"));
        let q = read_points_csv(&buf[..]).unwrap();
        assert_eq!(p.coords(), q.coords());
        assert!(read_points_csv(&b"dim0,dim1\n0.5\n"[..]).is_err());
        assert!(read_points_csv(&b"dim0\n1.5\n"[..]).is_err());
        assert!(read_points_csv(&b"x,y\n0.5,0.5\n"[..]).is_err());
    }

    #[test]
    fn pgm_round_trips() {
        let p8 = Pgm {
            width: 3,
            height: 2,
            max_value: 255,
            pixels: vec![0, 1, 2, 128, 254, 255],
        };
        assert_eq!(Pgm::from_bytes(&p8.to_bytes()).unwrap(), p8);
        let p16 = Pgm {
            width: 2,
            height: 2,
            max_value: 65535,
            pixels: vec![0, 300, 65535, 32768],
        };
        assert_eq!(Pgm::from_bytes(&p16.to_bytes()).unwrap(), p16);
        let with_comment = b"P5\n# made by hand\n2 1\n255\n\x07\x08";
        assert_eq!(Pgm::from_bytes(with_comment).unwrap().pixels, vec![7, 8]);
        assert!(Pgm::from_bytes(b"P5\n2 2\n255\n\x00").is_err());
        assert!(Pgm::from_bytes(b"P2\n1 1\n255\n0").is_err());
    }

    #[test]
    fn full_target_orientation() {
        let extent = 1;
        let mut power = vec![0.0; 9];
        power[2] = 1.5; // k = (-1, 1)
        let pgm = full_target_to_pgm(extent, &power).unwrap();
        // column c = k0 + K = 0, row r = k1 + K = 2
        assert_eq!(pgm.pixels[2 * 3], 49152);
        assert_eq!(pgm_to_full_target(&pgm).unwrap(), TargetSpectrum::Full { extent, power });
    }

    #[test]
    fn radial_and_pcf_tables_round_trip() {
        let t = RadialTable::new(vec![0.0, 0.5, 2.0], vec![0.0, 0.25, 1.0]).unwrap();
        let mut buf = Vec::new();
        write_radial_table(&mut buf, &t).unwrap();
        assert_eq!(read_radial_table(&buf[..]).unwrap(), t);
        let h = PcfHistogram::new(
            PcfSettings {
                bins: 3,
                r_max: 0.3,
                bandwidth: 0.01,
            },
            vec![0.0, 1.0 / 3.0, 2.5],
        )
        .unwrap();
        let mut buf = Vec::new();
        write_pcf_csv(&mut buf, &h).unwrap();
        assert_eq!(parse_pcf_csv(&buf[..]).unwrap(), h);
        assert!(parse_pcf_csv(&b"r,density\n0.1,1\n"[..]).is_err());
    }

    #[test]
    fn radial_profile_csv_is_a_target() {
        let csv = b"r,mean_power,anisotropy,count\n0.5,,,0\n1.5,0.2,0.1,8\n2.5,0.9,0.0,12\n";
        let t = read_radial_table(&csv[..]).unwrap();
        assert_eq!(t.radius(), &[1.5, 2.5]);
        assert_eq!(t.power(), &[0.2, 0.9]);
    }
}
