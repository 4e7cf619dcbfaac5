use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::spectral_data::{load_cube, load_spectrum_csv, SpectralImage};

pub const INDEX_FILE: &str = "index.tsv";
const INDEX_TMP: &str = "index.tsv.tmp";

/// Column name expected in white spectrum CSV files.
pub const WHITE_COLUMN: &str = "white";

/// One row of the index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReferenceEntry {
    pub id: String,
    pub cube_path: PathBuf,
    pub white_path: Option<PathBuf>,
    pub metadata: String,
}

#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize)]
pub struct ReferenceInfo {
    pub id: String,
    pub width: usize,
    pub height: usize,
    pub bands: usize,
    pub metadata: String,
}

/// Directory holding `index.tsv`. Columns: id, cube path, white path (`-`
/// when absent), free-form metadata. Relative paths resolve against the root.
#[derive(Clone, Debug)]
pub struct ReferenceStore {
    root: PathBuf,
}

fn check_field(what: &str, value: &str) -> Result<()> {
    if value.contains(['\t', '\n', '\r']) {
        return Err(Error::InvariantViolation(format!(
            "{what} must not contain tabs or newlines: {value:?}"
        )));
    }
    Ok(())
}

impl ReferenceStore {
    /// Opens `root`, creating the directory if needed.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.root.join(p)
        }
    }

    /// Raw index rows in file order. A missing index is an empty store.
    pub fn entries(&self) -> Result<Vec<ReferenceEntry>> {
        let path = self.root.join(INDEX_FILE);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(Error::io(&path, e)),
        };
        let mut out: Vec<ReferenceEntry> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 4 || cols[0].is_empty() || cols[1].is_empty() {
                return Err(Error::IndexCorrupt(format!(
                    "line {}: expected 4 tab-separated columns",
                    i + 1
                )));
            }
            if out.iter().any(|e| e.id == cols[0]) {
                return Err(Error::IndexCorrupt(format!("id {} appears twice", cols[0])));
            }
            out.push(ReferenceEntry {
                id: cols[0].to_string(),
                cube_path: PathBuf::from(cols[1]),
                white_path: (cols[2] != "-").then(|| PathBuf::from(cols[2])),
                metadata: cols[3].to_string(),
            });
        }
        Ok(out)
    }

    fn entry(&self, id: &str) -> Result<ReferenceEntry> {
        self.entries()?
            .into_iter()
            .find(|e| e.id == id)
            .ok_or_else(|| Error::UnknownReference(id.to_string()))
    }

    /// Registers a cube. The cube (and white, if given) must load; the index
    /// is replaced by rename so readers see either the old or the new file.
    pub fn add_reference(
        &self,
        id: &str,
        cube_path: &Path,
        white_path: Option<&Path>,
        metadata: &str,
    ) -> Result<()> {
        self.add_reference_with(id, cube_path, white_path, metadata, || Ok(()))
    }

    fn add_reference_with(
        &self,
        id: &str,
        cube_path: &Path,
        white_path: Option<&Path>,
        metadata: &str,
        before_rename: impl FnOnce() -> Result<()>,
    ) -> Result<()> {
        if id.is_empty() || id == "-" {
            return Err(Error::InvariantViolation(format!("invalid reference id {id:?}")));
        }
        check_field("id", id)?;
        check_field("metadata", metadata)?;
        let mut entries = self.entries()?;
        if entries.iter().any(|e| e.id == id) {
            return Err(Error::DuplicateId(id.to_string()));
        }
        let cube_abs = self.resolve(cube_path);
        let cube = load_cube(&cube_abs).map_err(|e| Error::LoadFailure(format!("{id}: {e}")))?;
        if let Some(w) = white_path {
            load_spectrum_csv(self.resolve(w), WHITE_COLUMN, cube.axis())
                .map_err(|e| Error::LoadFailure(format!("{id} white: {e}")))?;
        }
        let as_text = |p: &Path| -> Result<String> {
            let s = p.to_str().ok_or_else(|| {
                Error::InvariantViolation(format!("path is not valid UTF-8: {}", p.display()))
            })?;
            check_field("path", s)?;
            Ok(s.to_string())
        };
        as_text(cube_path)?;
        if let Some(w) = white_path {
            as_text(w)?;
        }
        entries.push(ReferenceEntry {
            id: id.to_string(),
            cube_path: cube_path.to_path_buf(),
            white_path: white_path.map(Path::to_path_buf),
            metadata: metadata.to_string(),
        });
        self.commit(&entries, before_rename)
    }

    fn commit(&self, entries: &[ReferenceEntry], before_rename: impl FnOnce() -> Result<()>) -> Result<()> {
        let mut text = String::new();
        for e in entries {
            let white = e
                .white_path
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_else(|| "-".into());
            text.push_str(&format!(
                "{}\t{}\t{}\t{}\n",
                e.id,
                e.cube_path.display(),
                white,
                e.metadata
            ));
        }
        let tmp = self.root.join(INDEX_TMP);
        let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(text.as_bytes()).map_err(|e| Error::io(&tmp, e))?;
        f.sync_all().map_err(|e| Error::io(&tmp, e))?;
        drop(f);
        before_rename()?;
        let index = self.root.join(INDEX_FILE);
        fs::rename(&tmp, &index).map_err(|e| Error::io(&index, e))
    }

    /// One entry per index row, sorted by id. Every cube is opened to report
    /// its shape, so a dangling path is reported as corruption.
    pub fn list_references(&self) -> Result<Vec<ReferenceInfo>> {
        let mut entries = self.entries()?;
        entries.sort_by(|a, b| a.id.cmp(&b.id));
        entries
            .into_iter()
            .map(|e| {
                let img = load_cube(self.resolve(&e.cube_path))
                    .map_err(|err| Error::IndexCorrupt(format!("{}: {err}", e.id)))?;
                Ok(ReferenceInfo {
                    id: e.id,
                    width: img.width(),
                    height: img.height(),
                    bands: img.bands(),
                    metadata: e.metadata,
                })
            })
            .collect()
    }

    /// The reference cube and, if registered, its white spectrum.
    pub fn load(&self, id: &str) -> Result<(SpectralImage, Option<Vec<f64>>)> {
        let e = self.entry(id)?;
        let img = load_cube(self.resolve(&e.cube_path))
            .map_err(|err| Error::IndexCorrupt(format!("{id}: {err}")))?;
        let white = match &e.white_path {
            Some(p) => Some(
                load_spectrum_csv(self.resolve(p), WHITE_COLUMN, img.axis())
                    .map_err(|err| Error::IndexCorrupt(format!("{id} white: {err}")))?,
            ),
            None => None,
        };
        Ok((img, white))
    }
}
