//! On-disk cache of character tables, keyed by Cayley-table digest.
//!
//! Files live at `<dir>/chartables-v{VERSION}/<digest>.json`. Unreadable,
//! stale or inconsistent entries are ignored and recomputed.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use finmf_core::char_table::{character_table, seed_cache, CharTableFile, CharacterTable};
use finmf_core::FiniteGroup;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const CACHE_VERSION: u32 = 1;
pub const CACHE_ENV: &str = "FINMF_CACHE_DIR";

#[derive(Serialize, Deserialize)]
struct Entry {
    version: u32,
    digest: String,
    table: CharTableFile,
}

pub struct TableCache {
    dir: PathBuf,
}

impl TableCache {
    pub fn new(root: &Path) -> TableCache {
        TableCache { dir: root.join(format!("chartables-v{CACHE_VERSION}")) }
    }

    fn path(&self, g: &FiniteGroup) -> PathBuf {
        self.dir.join(format!("{}.json", g.digest_hex()))
    }

    fn load(&self, g: &FiniteGroup) -> Option<CharacterTable> {
        let text = fs::read_to_string(self.path(g)).ok()?;
        let entry: Entry = serde_json::from_str(&text).ok()?;
        if entry.version != CACHE_VERSION || entry.digest != g.digest_hex() {
            return None;
        }
        let table = CharacterTable::from_file(&entry.table)?;
        let info = g.classes();
        let sizes: Vec<usize> = info.classes.iter().map(Vec::len).collect();
        (table.class_sizes == sizes && table.verify(&info.inverse_class).is_ok()).then_some(table)
    }

    fn store(&self, g: &FiniteGroup, table: &CharacterTable) -> Result<(), CliError> {
        let reps: Vec<String> = g.classes().representative.iter().map(|&r| g.element_name(r).to_string()).collect();
        let entry = Entry { version: CACHE_VERSION, digest: g.digest_hex(), table: table.to_file(&reps) };
        fs::create_dir_all(&self.dir)?;
        let path = self.path(g);
        let tmp = path.with_extension(format!("tmp{}", std::process::id()));
        fs::write(&tmp, serde_json::to_vec(&entry).expect("serializable"))?;
        fs::rename(&tmp, &path)?;
        Ok(())
    }

    /// The group itself and every centralizer subgroup, as used by the
    /// Drinfeld double.
    fn relevant_groups(g: &FiniteGroup) -> Result<Vec<FiniteGroup>, CliError> {
        let mut out = vec![g.clone()];
        for cent in &g.classes().centralizer {
            out.push(g.subgroup(cent)?.0);
        }
        Ok(out)
    }

    /// Seeds the in-memory cache from disk.
    pub fn preload(&self, g: &FiniteGroup) -> Result<(), CliError> {
        for sub in Self::relevant_groups(g)? {
            if let Some(table) = self.load(&sub) {
                seed_cache(&sub, Arc::new(table));
            }
        }
        Ok(())
    }

    /// Writes every relevant table that is not yet on disk.
    pub fn persist(&self, g: &FiniteGroup) -> Result<(), CliError> {
        for sub in Self::relevant_groups(g)? {
            if self.load(&sub).is_some() {
                continue;
            }
            let table = character_table(&sub)?;
            self.store(&sub, &table)?;
        }
        Ok(())
    }
}
