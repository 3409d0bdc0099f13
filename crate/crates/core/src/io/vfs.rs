//! VFS1 value-field stack files.
//!
//! Layout: the magic line `VFS1`, a UTF-8 header of `key=value` lines, one
//! blank line, then for each stored time (in list order) and each mode (by
//! id) the field as little-endian IEEE-754 doubles in row-major order, and
//! finally the FNV-1a 64-bit hash of the payload bytes, little-endian.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, ValueField};
use crate::io::hexfloat::{format_hex, parse_hex};
use crate::io::{owner_from_str, owner_str};
use crate::solver::{SolveMeta, SolveResult, SolverConfig};

pub const MAGIC: &str = "VFS1";

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

fn hex_list(v: &[f64]) -> String {
    v.iter().map(|x| format_hex(*x)).collect::<Vec<_>>().join(",")
}

fn check_token(what: &str, s: &str) -> Result<()> {
    if s.is_empty() || s.contains([',', '\n', '\r']) {
        return Err(Error::Format(format!("{what} {s:?} cannot be stored (empty or contains ',' or a newline)")));
    }
    Ok(())
}

fn header(r: &SolveResult) -> Result<String> {
    let g = r.grid();
    let c = &r.meta.config;
    for name in r.meta.mode_names.iter().chain(&r.meta.state_names) {
        check_token("name", name)?;
    }
    let mut lines = vec![
        format!("dim={}", g.dim()),
        format!("lo={}", hex_list(g.lo())),
        format!("hi={}", hex_list(g.hi())),
        format!("n={}", g.n().iter().map(|n| n.to_string()).collect::<Vec<_>>().join(",")),
        format!("periodic={}", g.periodic().iter().map(|&p| if p { "1" } else { "0" }).collect::<Vec<_>>().join(",")),
        format!("modes={}", r.mode_count()),
        format!("mode_names={}", r.meta.mode_names.join(",")),
        format!("state_names={}", r.meta.state_names.join(",")),
        format!("time_count={}", r.times.len()),
        format!("times={}", hex_list(&r.times)),
        format!("role={}", c.role.as_str()),
        format!("horizon={}", format_hex(c.horizon)),
        format!("cfl_factor={}", format_hex(c.cfl_factor)),
        format!("max_dt={}", format_hex(c.max_dt)),
        format!("snapshot_stride={}", c.snapshot_stride),
        format!("forced_owner_override={}", c.forced_owner_override.map_or("none", owner_str)),
        format!("large_value={}", format_hex(c.large_value)),
        format!("threads={}", c.threads),
        format!("dt={}", format_hex(r.meta.dt)),
        format!("steps={}", r.meta.steps),
        format!("model={}", r.meta.model),
    ];
    for (k, v) in &r.meta.model_params {
        if k.contains(['=', '\n']) || v.contains('\n') {
            return Err(Error::Format(format!("model parameter {k:?} cannot be stored")));
        }
        lines.push(format!("param.{k}={v}"));
    }
    let mut out = format!("{MAGIC}\n");
    for l in lines {
        out.push_str(&l);
        out.push('\n');
    }
    out.push('\n');
    Ok(out)
}

pub fn encode(r: &SolveResult) -> Result<Vec<u8>> {
    let mut bytes = header(r)?.into_bytes();
    let start = bytes.len();
    let len = r.grid().len();
    bytes.reserve(r.times.len() * r.mode_count() * len * 8 + 8);
    for k in 0..r.times.len() {
        for m in 0..r.mode_count() {
            for v in r.fields[m][k].data() {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    let sum = fnv1a(&bytes[start..]);
    bytes.extend_from_slice(&sum.to_le_bytes());
    Ok(bytes)
}

/// Writes to a sibling temporary file and renames it into place.
pub fn write_result(r: &SolveResult, path: &Path) -> Result<()> {
    let bytes = encode(r)?;
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::usage(format!("{} is not a file path", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp-{}", file_name.to_string_lossy(), std::process::id()));
    let res = (|| -> Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(&bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)?;
        Ok(())
    })();
    if res.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    res
}

pub fn read_result(path: &Path) -> Result<SolveResult> {
    decode(&fs::read(path)?)
}

struct Header<'a> {
    entries: Vec<(&'a str, &'a str)>,
}

impl<'a> Header<'a> {
    fn get(&self, key: &str) -> Result<&'a str> {
        self.entries
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, v)| *v)
            .ok_or_else(|| Error::Format(format!("header lacks {key:?}")))
    }

    fn usize(&self, key: &str) -> Result<usize> {
        self.get(key)?.parse().map_err(|_| Error::Format(format!("header {key} is not an integer")))
    }

    fn f64(&self, key: &str) -> Result<f64> {
        parse_hex(self.get(key)?)
    }

    fn list(&self, key: &str) -> Result<Vec<&'a str>> {
        let v = self.get(key)?;
        Ok(if v.is_empty() { Vec::new() } else { v.split(',').collect() })
    }

    fn f64_list(&self, key: &str) -> Result<Vec<f64>> {
        self.list(key)?.into_iter().map(parse_hex).collect()
    }
}

pub fn decode(bytes: &[u8]) -> Result<SolveResult> {
    let magic_end = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::Truncated("no magic line".into()))?;
    let magic = String::from_utf8_lossy(&bytes[..magic_end]);
    if magic != MAGIC {
        if magic.starts_with("VFS") {
            return Err(Error::Version { found: magic.into_owned(), expected: MAGIC.into() });
        }
        return Err(Error::Format("not a VFS file".into()));
    }
    let rest = &bytes[magic_end + 1..];
    let header_end = rest
        .windows(2)
        .position(|w| w == b"\n\n")
        .ok_or_else(|| Error::Truncated("header is not terminated".into()))?;
    let text = std::str::from_utf8(&rest[..header_end]).map_err(|_| Error::Format("header is not UTF-8".into()))?;
    let mut entries = Vec::new();
    for line in text.lines() {
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Format(format!("bad header line {line:?}")))?;
        entries.push((k, v));
    }
    let h = Header { entries };

    let dim = h.usize("dim")?;
    let lo = h.f64_list("lo")?;
    let hi = h.f64_list("hi")?;
    let n = h
        .list("n")?
        .into_iter()
        .map(|s| s.parse::<usize>().map_err(|_| Error::Format("bad node count".into())))
        .collect::<Result<Vec<_>>>()?;
    let periodic = h
        .list("periodic")?
        .into_iter()
        .map(|s| match s {
            "0" => Ok(false),
            "1" => Ok(true),
            _ => Err(Error::Format("bad periodic flag".into())),
        })
        .collect::<Result<Vec<_>>>()?;
    if [lo.len(), hi.len(), n.len(), periodic.len()].iter().any(|&l| l != dim) {
        return Err(Error::Format("grid header lengths disagree with dim".into()));
    }
    let grid = Arc::new(GridSpec::new(lo, hi, n, periodic).map_err(|e| Error::Format(e.to_string()))?);
    let modes = h.usize("modes")?;
    let mode_names: Vec<String> = h.list("mode_names")?.into_iter().map(String::from).collect();
    let state_names: Vec<String> = h.list("state_names")?.into_iter().map(String::from).collect();
    let time_count = h.usize("time_count")?;
    let times = h.f64_list("times")?;
    if times.len() != time_count || mode_names.len() != modes || time_count == 0 {
        return Err(Error::Format("time or mode counts disagree".into()));
    }
    let config = SolverConfig {
        horizon: h.f64("horizon")?,
        role: h.get("role")?.parse()?,
        cfl_factor: h.f64("cfl_factor")?,
        max_dt: h.f64("max_dt")?,
        snapshot_stride: h.usize("snapshot_stride")?,
        forced_owner_override: match h.get("forced_owner_override")? {
            "none" => None,
            s => Some(owner_from_str(s)?),
        },
        large_value: h.f64("large_value")?,
        threads: h.usize("threads")?,
    };
    let model_params = h
        .entries
        .iter()
        .filter_map(|(k, v)| k.strip_prefix("param.").map(|k| (k.to_string(), v.to_string())))
        .collect();

    let len = grid.len();
    let payload_len = time_count
        .checked_mul(modes)
        .and_then(|c| c.checked_mul(len))
        .and_then(|c| c.checked_mul(8))
        .ok_or_else(|| Error::Format("payload size overflows".into()))?;
    let payload = &rest[header_end + 2..];
    if payload.len() < payload_len + 8 {
        return Err(Error::Truncated(format!(
            "expected {} payload bytes plus checksum, found {}",
            payload_len,
            payload.len()
        )));
    }
    if payload.len() > payload_len + 8 {
        return Err(Error::Format("trailing bytes after checksum".into()));
    }
    let stored = u64::from_le_bytes(payload[payload_len..].try_into().expect("8 bytes"));
    let computed = fnv1a(&payload[..payload_len]);
    if stored != computed {
        return Err(Error::Checksum { stored, computed });
    }

    let mut fields: Vec<Vec<ValueField>> = (0..modes).map(|_| Vec::with_capacity(time_count)).collect();
    let mut chunks = payload[..payload_len].chunks_exact(8);
    for _ in 0..time_count {
        for field in fields.iter_mut() {
            let data: Vec<f64> = chunks
                .by_ref()
                .take(len)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                .collect();
            field.push(ValueField::new(grid.clone(), data)?);
        }
    }

    Ok(SolveResult {
        times,
        fields,
        meta: SolveMeta {
            grid,
            config,
            model: h.get("model")?.to_string(),
            model_params,
            mode_names,
            state_names,
            dt: h.f64("dt")?,
            steps: h.usize("steps")?,
            wall_time: 0.0,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hji::GameRole;
    use crate::solver::solve;
    use crate::systems::make_dog1d;

    fn small_result() -> SolveResult {
        let sys = make_dog1d();
        let grid = GridSpec::uniform(vec![0.0], vec![10.0], vec![61]).unwrap();
        let cfg = SolverConfig { snapshot_stride: 8, ..SolverConfig::new(1.0, GameRole::Reach) };
        solve(&sys, &grid, &cfg).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let r = small_result();
        let back = decode(&encode(&r).unwrap()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn truncation_is_detected() {
        let bytes = encode(&small_result()).unwrap();
        for cut in [3, bytes.len() / 3, bytes.len() - 1] {
            let err = decode(&bytes[..cut]).unwrap_err();
            assert!(matches!(err, Error::Truncated(_)), "cut {cut}: {err}");
        }
    }

    #[test]
    fn corruption_is_detected() {
        let mut bytes = encode(&small_result()).unwrap();
        let i = bytes.len() - 100;
        bytes[i] ^= 0x01;
        assert!(matches!(decode(&bytes), Err(Error::Checksum { .. })));
    }

    #[test]
    fn version_mismatch_names_both() {
        let mut bytes = encode(&small_result()).unwrap();
        bytes[3] = b'2';
        let err = decode(&bytes).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("VFS2") && msg.contains("VFS1"), "{msg}");
    }

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a(b"foobar"), 0x85944171f73967e8);
    }
}
