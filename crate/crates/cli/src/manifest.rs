//! Run manifests: enough to re-run a command and reproduce its outputs.

use std::ffi::OsString;
use std::path::Path;

use clap::{ArgMatches, Command};
use crowdqf::kvfile::KvFile;
use crowdqf::{Error, Result};

/// Global flags that never influence outputs and are left out of manifests.
const UNRECORDED: [&str; 3] = ["--threads", "--manifest", "--seed"];

pub struct Manifest {
    pub subcommand: String,
    pub seed: u64,
    /// Command line without the program name and unrecorded globals.
    pub argv: Vec<String>,
    /// Every argument of the subcommand after defaults are applied.
    pub resolved: Vec<(String, String)>,
}

fn strip_unrecorded(argv: &[OsString]) -> Vec<String> {
    let mut out = Vec::new();
    let mut skip_value = false;
    for arg in argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned()) {
        if skip_value {
            skip_value = false;
            continue;
        }
        if UNRECORDED.contains(&arg.as_str()) {
            skip_value = true;
        } else if !UNRECORDED.iter().any(|flag| arg.starts_with(&format!("{flag}="))) {
            out.push(arg);
        }
    }
    out
}

impl Manifest {
    pub fn capture(command: &Command, seed: u64, argv: &[OsString], matches: &ArgMatches) -> Self {
        let args: Vec<&str> = command.get_arguments().map(|a| a.get_id().as_str()).collect();
        let mut resolved: Vec<(String, String)> = matches
            .ids()
            .filter(|id| args.contains(&id.as_str()))
            .filter(|id| !["seed", "threads", "manifest"].contains(&id.as_str()))
            .filter_map(|id| {
                let raw = matches.get_raw(id.as_str())?;
                let values: Vec<String> = raw.map(|v| v.to_string_lossy().into_owned()).collect();
                Some((id.to_string(), values.join(",")))
            })
            .collect();
        resolved.sort();
        Self {
            subcommand: command.get_name().to_string(),
            seed,
            argv: strip_unrecorded(argv),
            resolved,
        }
    }

    pub fn to_kv(&self) -> KvFile {
        let mut kv = KvFile::default();
        kv.insert("subcommand", self.subcommand.clone());
        kv.insert("version", env!("CARGO_PKG_VERSION"));
        kv.insert("seed", self.seed.to_string());
        for (i, a) in self.argv.iter().enumerate() {
            kv.insert(format!("argv.{i}"), a.clone());
        }
        for (k, v) in &self.resolved {
            kv.insert(format!("flag.{k}"), v.clone());
        }
        kv
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        self.to_kv().write(path)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let kv = KvFile::read(path)?;
        let field = |key: &str| {
            kv.get(key)
                .map(str::to_string)
                .ok_or_else(|| Error::MalformedInput(format!("manifest lacks `{key}`")))
        };
        let seed = field("seed")?
            .parse()
            .map_err(|_| Error::MalformedInput("manifest seed is not an integer".into()))?;
        let argv = (0..)
            .map_while(|i| kv.get(&format!("argv.{i}")).map(str::to_string))
            .collect();
        let resolved = kv
            .keys()
            .filter_map(|k| Some((k.strip_prefix("flag.")?.to_string(), kv.get(k)?.to_string())))
            .collect();
        Ok(Self {
            subcommand: field("subcommand")?,
            seed,
            argv,
            resolved,
        })
    }
}
