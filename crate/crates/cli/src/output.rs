//! Output files are written to a temporary sibling and renamed into place, so
//! a rerun never leaves a half-written file behind.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;

pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: &Path) -> anyhow::Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        Ok(Self {
            root: root.to_path_buf(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Streams into `name` through `fill`, then atomically replaces the target.
    pub fn write_with<F>(&self, name: &str, fill: F) -> anyhow::Result<PathBuf>
    where
        F: FnOnce(&mut BufWriter<fs::File>) -> anyhow::Result<()>,
    {
        let target = self.path(name);
        let tmp = self.path(&format!(".{name}.tmp{}", std::process::id()));
        let result = (|| -> anyhow::Result<()> {
            let mut w = BufWriter::new(fs::File::create(&tmp)?);
            fill(&mut w)?;
            w.into_inner().map_err(|e| e.into_error())?.sync_all()?;
            fs::rename(&tmp, &target)?;
            Ok(())
        })();
        if result.is_err() {
            let _ = fs::remove_file(&tmp);
        }
        result.with_context(|| format!("writing {}", target.display()))?;
        Ok(target)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> anyhow::Result<PathBuf> {
        self.write_with(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            writeln!(w)?;
            Ok(())
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rewrite_replaces_contents() {
        let dir = tempfile::tempdir().unwrap();
        let out = OutDir::create(&dir.path().join("nested")).unwrap();
        out.write_json("a.json", &[1, 2]).unwrap();
        let p = out.write_json("a.json", &[3]).unwrap();
        let back: Vec<i32> = serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap();
        assert_eq!(back, vec![3]);
        let names: Vec<_> = fs::read_dir(dir.path().join("nested")).unwrap().collect();
        assert_eq!(names.len(), 1);
    }
}
