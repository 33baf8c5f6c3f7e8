use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::{io_err, DataError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Object,
    Receptacle,
    Distractor,
}

/// Triangulated mesh with its catalog metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct MeshAsset {
    /// Catalog file name, used as the asset reference in plans.
    pub name: String,
    pub vertices: Vec<Vector3<f64>>,
    pub triangles: Vec<[u32; 3]>,
    pub category: String,
    pub prompt_noun: String,
    pub role_tags: BTreeSet<Role>,
}

impl MeshAsset {
    pub fn new(
        name: impl Into<String>,
        vertices: Vec<Vector3<f64>>,
        triangles: Vec<[u32; 3]>,
    ) -> Result<Self, DataError> {
        let asset = Self {
            name: name.into(),
            vertices,
            triangles,
            category: String::new(),
            prompt_noun: String::new(),
            role_tags: BTreeSet::new(),
        };
        asset.check()?;
        Ok(asset)
    }

    pub fn check(&self) -> Result<(), DataError> {
        if self.triangles.is_empty() {
            return Err(DataError::Invariant(format!("mesh {} has no triangles", self.name)));
        }
        if !self.vertices.iter().all(|v| v.iter().all(|c| c.is_finite())) {
            return Err(DataError::Invariant(format!("mesh {} has non-finite vertices", self.name)));
        }
        let n = self.vertices.len() as u32;
        if let Some(t) = self.triangles.iter().find(|t| t.iter().any(|&i| i >= n)) {
            return Err(DataError::Invariant(format!(
                "mesh {} triangle {:?} indexes past {} vertices",
                self.name, t, n
            )));
        }
        Ok(())
    }

    pub fn has_role(&self, role: Role) -> bool {
        self.role_tags.contains(&role)
    }

    /// Axis-aligned bounds `(min, max)` of the vertices.
    pub fn bounds(&self) -> (Vector3<f64>, Vector3<f64>) {
        let mut lo = Vector3::repeat(f64::INFINITY);
        let mut hi = Vector3::repeat(f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        (lo, hi)
    }

    /// Copy with vertices uniformly scaled about the origin.
    pub fn scaled(&self, factor: f64) -> MeshAsset {
        MeshAsset { vertices: self.vertices.iter().map(|v| v * factor).collect(), ..self.clone() }
    }

    /// Axis-aligned box mesh (12 triangles) spanning `lo..hi`.
    pub fn cuboid(name: impl Into<String>, lo: Vector3<f64>, hi: Vector3<f64>) -> MeshAsset {
        let vertices = (0..8)
            .map(|i| {
                Vector3::new(
                    if i & 1 == 0 { lo.x } else { hi.x },
                    if i & 2 == 0 { lo.y } else { hi.y },
                    if i & 4 == 0 { lo.z } else { hi.z },
                )
            })
            .collect();
        let triangles = vec![
            [0, 2, 1], [1, 2, 3], // z = lo
            [4, 5, 6], [5, 7, 6], // z = hi
            [0, 1, 4], [1, 5, 4], // y = lo
            [2, 6, 3], [3, 6, 7], // y = hi
            [0, 4, 2], [2, 4, 6], // x = lo
            [1, 3, 5], [3, 7, 5], // x = hi
        ];
        MeshAsset::new(name, vertices, triangles).expect("cuboid is well formed")
    }

    /// OBJ text with `v` and `f` records only.
    pub fn to_obj(&self) -> String {
        let mut out = String::new();
        for v in &self.vertices {
            let _ = writeln!(out, "v {:?} {:?} {:?}", v.x, v.y, v.z);
        }
        for t in &self.triangles {
            let _ = writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
        }
        out
    }
}

/// Parses the OBJ subset: `v x y z` and triangular `f i j k` records. Other records are skipped.
pub fn parse_obj(text: &str, path: &Path) -> Result<(Vec<Vector3<f64>>, Vec<[u32; 3]>), DataError> {
    let err = |line: usize, message: String| DataError::Mesh { path: path.to_path_buf(), line, message };
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let coords = tokens
                    .take(3)
                    .map(|t| t.parse::<f64>().map_err(|e| err(lineno, format!("bad coordinate {t:?}: {e}"))))
                    .collect::<Result<Vec<_>, _>>()?;
                if coords.len() != 3 {
                    return Err(err(lineno, "vertex needs three coordinates".into()));
                }
                if !coords.iter().all(|c| c.is_finite()) {
                    return Err(err(lineno, "non-finite vertex coordinate".into()));
                }
                vertices.push(Vector3::new(coords[0], coords[1], coords[2]));
            }
            Some("f") => {
                let refs: Vec<&str> = tokens.collect();
                if refs.len() != 3 {
                    return Err(err(
                        lineno,
                        format!("face {} has {} vertices; only triangles are supported", triangles.len(), refs.len()),
                    ));
                }
                let mut tri = [0u32; 3];
                for (slot, r) in tri.iter_mut().zip(&refs) {
                    let head = r.split('/').next().unwrap_or("");
                    let idx: i64 = head.parse().map_err(|_| err(lineno, format!("bad vertex index {r:?}")))?;
                    let resolved = if idx < 0 { vertices.len() as i64 + idx } else { idx - 1 };
                    if resolved < 0 || resolved >= vertices.len() as i64 {
                        return Err(err(lineno, format!("vertex index {idx} out of range")));
                    }
                    *slot = resolved as u32;
                }
                triangles.push(tri);
            }
            _ => {}
        }
    }
    if triangles.is_empty() {
        return Err(err(0, "mesh has no triangles".into()));
    }
    Ok((vertices, triangles))
}

#[derive(Serialize, Deserialize)]
struct CatalogEntry {
    file: String,
    category: String,
    prompt_noun: String,
    role_tags: BTreeSet<Role>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogCounts {
    pub object: usize,
    pub receptacle: usize,
    pub distractor: usize,
}

#[derive(Clone, Debug, Default)]
pub struct MeshCatalog {
    pub assets: Vec<MeshAsset>,
}

impl MeshCatalog {
    pub fn with_role(&self, role: Role) -> Vec<&MeshAsset> {
        self.assets.iter().filter(|a| a.has_role(role)).collect()
    }

    pub fn get(&self, name: &str) -> Option<&MeshAsset> {
        self.assets.iter().find(|a| a.name == name)
    }

    pub fn counts(&self) -> CatalogCounts {
        CatalogCounts {
            object: self.with_role(Role::Object).len(),
            receptacle: self.with_role(Role::Receptacle).len(),
            distractor: self.with_role(Role::Distractor).len(),
        }
    }
}

/// Reads `catalog.json` and every OBJ it lists (paths relative to the catalog's directory).
pub fn load_mesh_catalog(path: &Path) -> Result<MeshCatalog, DataError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let entries: Vec<CatalogEntry> = serde_json::from_str(&text)
        .map_err(|e| DataError::Json { path: path.to_path_buf(), message: e.to_string() })?;
    if entries.is_empty() {
        return Err(DataError::EmptyCatalog(path.to_path_buf()));
    }
    let dir = path.parent().unwrap_or(Path::new("."));
    let assets = entries
        .into_iter()
        .map(|e| {
            let mesh_path: PathBuf = dir.join(&e.file);
            let obj = std::fs::read_to_string(&mesh_path).map_err(io_err(&mesh_path))?;
            let (vertices, triangles) = parse_obj(&obj, &mesh_path)?;
            Ok(MeshAsset {
                name: e.file,
                vertices,
                triangles,
                category: e.category,
                prompt_noun: e.prompt_noun,
                role_tags: e.role_tags,
            })
        })
        .collect::<Result<Vec<_>, DataError>>()?;
    let catalog = MeshCatalog { assets };
    let c = catalog.counts();
    log::info!(
        "loaded {} meshes from {} ({} object, {} receptacle, {} distractor)",
        catalog.assets.len(),
        path.display(),
        c.object,
        c.receptacle,
        c.distractor
    );
    Ok(catalog)
}

/// Writes `catalog.json` plus one OBJ per asset into `dir`.
pub fn save_mesh_catalog(dir: &Path, catalog: &MeshCatalog) -> Result<(), DataError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut entries = Vec::new();
    for a in &catalog.assets {
        let p = dir.join(&a.name);
        std::fs::write(&p, a.to_obj()).map_err(io_err(&p))?;
        entries.push(CatalogEntry {
            file: a.name.clone(),
            category: a.category.clone(),
            prompt_noun: a.prompt_noun.clone(),
            role_tags: a.role_tags.clone(),
        });
    }
    let p = dir.join("catalog.json");
    let json = serde_json::to_string_pretty(&entries).expect("catalog serialises");
    std::fs::write(&p, json).map_err(io_err(&p))
}
