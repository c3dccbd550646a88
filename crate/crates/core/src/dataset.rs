//! Dataset manifests and the positive/negative train/test split protocol.
//!
//! For a category of `N` images the first `ceil(N/2)` ids (manifest order)
//! are positive training data and the rest positive test data. Negative
//! training data is a leading fraction of every other category's train
//! half. Negative test data is the head of a constant external pool,
//! truncated to the size of the positive test set.

use std::collections::HashSet;
use std::io::BufRead;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DatasetError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("duplicate image id `{id}` in category `{category}`")]
    DuplicateId { category: String, id: String },
    #[error("duplicate category `{0}`")]
    DuplicateCategory(String),
    #[error("unknown category `{0}`")]
    UnknownCategory(String),
    #[error("category `{0}` has no images")]
    EmptyCategory(String),
    #[error("no remaining categories to draw negative training images from")]
    EmptyNegativeTrain,
    #[error("negative pool has {available} images, {needed} needed")]
    NegativePoolTooSmall { needed: usize, available: usize },
    #[error("negative fraction {0} outside (0, 1]")]
    InvalidFraction(f64),
    #[error("io error: {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoryEntry {
    pub name: String,
    pub image_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetManifest {
    pub dataset_name: String,
    pub categories: Vec<CategoryEntry>,
    pub negative_pool: Vec<String>,
}

/// Source category used for images drawn from the negative pool.
pub const NEGATIVE_POOL_SOURCE: &str = "negpool";

/// An image reference: (source category, image id).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ImageRef {
    pub source: String,
    pub image_id: String,
}

impl ImageRef {
    fn new(source: &str, image_id: &str) -> Self {
        Self {
            source: source.to_owned(),
            image_id: image_id.to_owned(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitPlan {
    pub category: String,
    pub pos_train: Vec<ImageRef>,
    pub pos_test: Vec<ImageRef>,
    pub neg_train: Vec<ImageRef>,
    pub neg_test: Vec<ImageRef>,
}

impl DatasetManifest {
    pub fn category(&self, name: &str) -> Option<&CategoryEntry> {
        self.categories.iter().find(|c| c.name == name)
    }

    /// Checks the uniqueness invariants. `load_manifest` always produces a
    /// valid manifest; this is for manifests built in code.
    pub fn validate(&self) -> Result<(), DatasetError> {
        let mut names = HashSet::new();
        for cat in &self.categories {
            if !names.insert(cat.name.as_str()) {
                return Err(DatasetError::DuplicateCategory(cat.name.clone()));
            }
            let mut ids = HashSet::new();
            for id in &cat.image_ids {
                if !ids.insert(id.as_str()) {
                    return Err(DatasetError::DuplicateId {
                        category: cat.name.clone(),
                        id: id.clone(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Size of the training half of a category with `n` images.
pub fn train_half(n: usize) -> usize {
    n.div_ceil(2)
}

/// Number of ids taken from a sibling category's train half.
pub fn negative_take(train_len: usize, fraction: f64) -> usize {
    let take = (fraction * train_len as f64).ceil() as usize;
    take.min(train_len)
}

pub fn build_split(
    manifest: &DatasetManifest,
    category: &str,
    negative_fraction: f64,
) -> Result<SplitPlan, DatasetError> {
    if !(negative_fraction > 0.0 && negative_fraction <= 1.0) {
        return Err(DatasetError::InvalidFraction(negative_fraction));
    }
    let target = manifest
        .category(category)
        .ok_or_else(|| DatasetError::UnknownCategory(category.to_owned()))?;
    if target.image_ids.is_empty() {
        return Err(DatasetError::EmptyCategory(target.name.clone()));
    }

    let half = train_half(target.image_ids.len());
    let refs = |ids: &[String]| -> Vec<ImageRef> {
        ids.iter().map(|id| ImageRef::new(&target.name, id)).collect()
    };
    let pos_train = refs(&target.image_ids[..half]);
    let pos_test = refs(&target.image_ids[half..]);

    let mut neg_train = Vec::new();
    for other in manifest.categories.iter().filter(|c| c.name != target.name) {
        if other.image_ids.is_empty() {
            return Err(DatasetError::EmptyCategory(other.name.clone()));
        }
        let train = &other.image_ids[..train_half(other.image_ids.len())];
        let take = negative_take(train.len(), negative_fraction);
        neg_train.extend(train[..take].iter().map(|id| ImageRef::new(&other.name, id)));
    }
    if neg_train.is_empty() {
        return Err(DatasetError::EmptyNegativeTrain);
    }

    if manifest.negative_pool.len() < pos_test.len() {
        return Err(DatasetError::NegativePoolTooSmall {
            needed: pos_test.len(),
            available: manifest.negative_pool.len(),
        });
    }
    let neg_test = manifest.negative_pool[..pos_test.len()]
        .iter()
        .map(|id| ImageRef::new(NEGATIVE_POOL_SOURCE, id))
        .collect();

    Ok(SplitPlan {
        category: target.name.clone(),
        pos_train,
        pos_test,
        neg_train,
        neg_test,
    })
}

/// Parses the line-oriented manifest format:
///
/// ```text
/// MANIFEST <dataset_name>
/// CAT <category_name>
/// IMG <image_id>
/// ...
/// NEGPOOL
/// IMG <image_id>
/// ```
///
/// Blank lines are ignored.
pub fn load_manifest<R: BufRead>(reader: R) -> Result<DatasetManifest, DatasetError> {
    enum Section {
        None,
        Category,
        Pool,
    }

    let mut dataset_name = None;
    let mut categories: Vec<CategoryEntry> = Vec::new();
    let mut seen_ids: Vec<HashSet<String>> = Vec::new();
    let mut pool: Vec<String> = Vec::new();
    let mut pool_seen = false;
    let mut section = Section::None;

    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| DatasetError::Io(e.to_string()))?;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        let parse_err = |msg: &str| DatasetError::Parse {
            line: lineno,
            msg: msg.to_owned(),
        };

        if dataset_name.is_none() {
            match tokens.as_slice() {
                ["MANIFEST", name] => {
                    dataset_name = Some((*name).to_owned());
                    continue;
                }
                _ => return Err(parse_err("expected `MANIFEST <dataset_name>` header")),
            }
        }

        match tokens.as_slice() {
            ["CAT", name] => {
                if pool_seen {
                    return Err(parse_err("CAT after NEGPOOL section"));
                }
                if categories.iter().any(|c| c.name == *name) {
                    return Err(DatasetError::DuplicateCategory((*name).to_owned()));
                }
                categories.push(CategoryEntry {
                    name: (*name).to_owned(),
                    image_ids: Vec::new(),
                });
                seen_ids.push(HashSet::new());
                section = Section::Category;
            }
            ["NEGPOOL"] => {
                if pool_seen {
                    return Err(parse_err("repeated NEGPOOL section"));
                }
                pool_seen = true;
                section = Section::Pool;
            }
            ["IMG", id] => match section {
                Section::None => return Err(parse_err("IMG before any CAT or NEGPOOL")),
                Section::Category => {
                    let cat = categories.last_mut().expect("category section has a category");
                    let seen = seen_ids.last_mut().expect("parallel to categories");
                    if !seen.insert((*id).to_owned()) {
                        return Err(DatasetError::DuplicateId {
                            category: cat.name.clone(),
                            id: (*id).to_owned(),
                        });
                    }
                    cat.image_ids.push((*id).to_owned());
                }
                Section::Pool => pool.push((*id).to_owned()),
            },
            ["MANIFEST", ..] => return Err(parse_err("repeated MANIFEST header")),
            _ => return Err(parse_err(&format!("unrecognized line `{line}`"))),
        }
    }

    let dataset_name = dataset_name.ok_or(DatasetError::Parse {
        line: 1,
        msg: "missing MANIFEST header".into(),
    })?;
    Ok(DatasetManifest {
        dataset_name,
        categories,
        negative_pool: pool,
    })
}

/// Renders a manifest in the format read by [`load_manifest`].
pub fn write_manifest(manifest: &DatasetManifest) -> String {
    let mut out = format!("MANIFEST {}\n", manifest.dataset_name);
    for cat in &manifest.categories {
        out.push_str(&format!("CAT {}\n", cat.name));
        for id in &cat.image_ids {
            out.push_str(&format!("IMG {id}\n"));
        }
    }
    out.push_str("NEGPOOL\n");
    for id in &manifest.negative_pool {
        out.push_str(&format!("IMG {id}\n"));
    }
    out
}

/// Builds a manifest with `sizes[i]` images in category `names[i]` and a
/// pool of `pool` images. Ids are `<category>_<index>`.
pub fn synthetic_manifest(name: &str, categories: &[(&str, usize)], pool: usize) -> DatasetManifest {
    DatasetManifest {
        dataset_name: name.to_owned(),
        categories: categories
            .iter()
            .map(|(cat, n)| CategoryEntry {
                name: (*cat).to_owned(),
                image_ids: (0..*n).map(|i| format!("{cat}_{i:04}")).collect(),
            })
            .collect(),
        negative_pool: (0..pool).map(|i| format!("animal_{i:05}")).collect(),
    }
}
