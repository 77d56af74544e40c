//! Site profiles on disk: `<root>/<site>/{profile.json, contribution.chmd, grid.chmg}`.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use oledcolor::contribution::{normalize_site, ContributionVector};
use oledcolor::io::atomic_write;
use oledcolor::optimizer::{Algorithm, LEVELS};
use serde::{Deserialize, Serialize};

use crate::ServiceError;

pub const PROFILE_FILE: &str = "profile.json";
pub const CONTRIBUTION_FILE: &str = "contribution.chmd";
pub const GRID_FILE: &str = "grid.chmg";

/// Collection past this many sites warns but proceeds.
pub const SOFT_SITE_CAP: usize = 20;

/// A grid cell plus the logo choice.
///
/// Level 0 stands for "no transformation" and is accepted by the transform
/// paths only; a persisted option always names a grid level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selection {
    pub algorithm: Algorithm,
    pub level: u8,
    #[serde(default)]
    pub logo_as_gui: bool,
}

impl Selection {
    pub fn validate_level(&self) -> Result<(), ServiceError> {
        if (1..=LEVELS.len() as u8).contains(&self.level) {
            Ok(())
        } else {
            Err(ServiceError::Invalid(format!("level {} is outside 1..={}", self.level, LEVELS.len())))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteProfile {
    pub site: String,
    pub contribution: String,
    pub grid: Option<String>,
    pub option: Option<Selection>,
}

impl SiteProfile {
    fn new(site: String) -> Self {
        Self { site, contribution: CONTRIBUTION_FILE.into(), grid: None, option: None }
    }
}

#[derive(Debug, Clone)]
pub struct ProfileStore {
    root: PathBuf,
}

impl ProfileStore {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Site key for user input; rejects anything that is not a host name.
    pub fn site_key(input: &str) -> Result<String, ServiceError> {
        let key = normalize_site(input).map_err(|e| ServiceError::Invalid(e.to_string()))?;
        if key.contains(['/', '\\']) || key.starts_with('.') {
            return Err(ServiceError::Invalid(format!("bad site key `{key}`")));
        }
        Ok(key)
    }

    pub fn site_dir(&self, site: &str) -> PathBuf {
        self.root.join(site)
    }

    /// Profiles sorted by site key. A missing root is an empty store.
    pub fn list(&self) -> Result<Vec<SiteProfile>, ServiceError> {
        let entries = match fs::read_dir(&self.root) {
            Ok(e) => e,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(e.into()),
        };
        let mut out = Vec::new();
        for entry in entries {
            let entry = entry?;
            if !entry.file_type()?.is_dir() {
                continue;
            }
            if let Some(p) = self.load(&entry.file_name().to_string_lossy())? {
                out.push(p);
            }
        }
        out.sort_by(|a, b| a.site.cmp(&b.site));
        Ok(out)
    }

    pub fn load(&self, site: &str) -> Result<Option<SiteProfile>, ServiceError> {
        match fs::read(self.site_dir(site).join(PROFILE_FILE)) {
            Ok(bytes) => Ok(Some(serde_json::from_slice(&bytes)?)),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    pub fn require(&self, site: &str) -> Result<SiteProfile, ServiceError> {
        self.load(site)?.ok_or_else(|| ServiceError::UnknownSite(site.to_string()))
    }

    pub fn save(&self, p: &SiteProfile) -> Result<(), ServiceError> {
        let dir = self.site_dir(&p.site);
        fs::create_dir_all(&dir)?;
        let mut json = serde_json::to_vec_pretty(p)?;
        json.push(b'\n');
        atomic_write(&dir.join(PROFILE_FILE), &json)?;
        Ok(())
    }

    /// The stored contribution vector, or an empty one for a new site.
    pub fn contribution(&self, site: &str) -> Result<ContributionVector, ServiceError> {
        let Some(p) = self.load(site)? else {
            return Ok(ContributionVector::new(site));
        };
        match fs::read(self.site_dir(site).join(&p.contribution)) {
            Ok(bytes) => Ok(ContributionVector::decode(&bytes, site)?),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(ContributionVector::new(site)),
            Err(e) => Err(e.into()),
        }
    }

    /// Write the contribution file, creating the profile if needed.
    pub fn save_contribution(&self, d: &ContributionVector) -> Result<SiteProfile, ServiceError> {
        let p = match self.load(&d.site)? {
            Some(p) => p,
            None => {
                let p = SiteProfile::new(d.site.clone());
                self.save(&p)?;
                p
            }
        };
        atomic_write(&self.site_dir(&p.site).join(&p.contribution), &d.encode())?;
        Ok(p)
    }

    pub fn grid_bytes(&self, p: &SiteProfile) -> Result<Vec<u8>, ServiceError> {
        let name = p.grid.as_deref().ok_or_else(|| ServiceError::NoGrid(p.site.clone()))?;
        match fs::read(self.site_dir(&p.site).join(name)) {
            Ok(b) => Ok(b),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Err(ServiceError::NoGrid(p.site.clone())),
            Err(e) => Err(e.into()),
        }
    }

    /// Store a new grid. A chosen option whose cell is gone is cleared.
    pub fn save_grid(&self, site: &str, bytes: &[u8], available: &[(Algorithm, u8)]) -> Result<SiteProfile, ServiceError> {
        let mut p = self.require(site)?;
        atomic_write(&self.site_dir(site).join(GRID_FILE), bytes)?;
        p.grid = Some(GRID_FILE.into());
        if p.option.is_some_and(|o| !available.contains(&(o.algorithm, o.level))) {
            p.option = None;
        }
        self.save(&p)?;
        Ok(p)
    }
}
