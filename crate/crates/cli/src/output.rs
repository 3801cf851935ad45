use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use ecorl::harness::{RunArtifacts, SeedArtifacts};
use serde::Serialize;

/// Makes `dir` ready for fresh output. An existing non-empty directory is an
/// error unless `overwrite` is set, in which case it is removed first.
pub fn prepare_dir(dir: &Path, overwrite: bool) -> Result<()> {
    if dir.exists() && fs::read_dir(dir)?.next().is_some() {
        if !overwrite {
            bail!("{} already exists; pass --overwrite to replace it", dir.display());
        }
        fs::remove_dir_all(dir).with_context(|| format!("removing {}", dir.display()))?;
    }
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

/// Fails if `path` exists and `overwrite` is not set.
pub fn guard_file(path: &Path, overwrite: bool) -> Result<()> {
    if path.exists() && !overwrite {
        bail!("{} already exists; pass --overwrite to replace it", path.display());
    }
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    Ok(())
}

pub fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path).with_context(|| format!("creating {}", path.display()))?);
    for r in rows {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

/// Count matrix as CSV, one grid row per line (row 0 is y = 0).
pub fn matrix_csv(m: &[Vec<u64>]) -> String {
    let mut s = String::new();
    for row in m {
        let cells: Vec<String> = row.iter().map(u64::to_string).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

/// `seed<k>/{metrics.jsonl, checkpoint.bin, heatmaps/epoch_XXX.csv}`.
pub fn write_seed(dir: &Path, seed: &SeedArtifacts) -> Result<()> {
    let dir = dir.join(format!("seed{}", seed.seed));
    fs::create_dir_all(dir.join("heatmaps"))?;
    write_jsonl(&dir.join("metrics.jsonl"), &seed.records)?;
    for (e, h) in seed.heatmaps.iter().enumerate() {
        fs::write(dir.join("heatmaps").join(format!("epoch_{e:03}.csv")), matrix_csv(h))?;
    }
    seed.checkpoint.save(&dir.join("checkpoint.bin"))?;
    Ok(())
}

/// Per-seed outputs plus `aggregate.jsonl` for one variant.
pub fn write_run(dir: &Path, run: &RunArtifacts) -> Result<()> {
    for s in &run.seeds {
        write_seed(dir, s)?;
    }
    write_jsonl(&dir.join("aggregate.jsonl"), &run.aggregate)
}
