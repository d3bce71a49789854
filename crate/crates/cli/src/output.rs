use std::fs;
use std::path::{Path, PathBuf};

use simcal::density::ExportFile;
use simcal::ErrorClass;

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure { code: EXIT_USAGE, message: message.into() }
    }

    pub fn numeric(message: impl Into<String>) -> Self {
        Failure { code: EXIT_NUMERIC, message: message.into() }
    }

    /// Wrap a library error, prefixing the file it came from.
    pub fn at(path: &Path) -> impl Fn(simcal::Error) -> Failure + '_ {
        move |e| {
            let mut f = Failure::from(e);
            f.message = format!("{}: {}", path.display(), f.message);
            f
        }
    }
}

impl From<simcal::Error> for Failure {
    fn from(e: simcal::Error) -> Self {
        let code = match e.class() {
            ErrorClass::Usage => EXIT_USAGE,
            ErrorClass::Validation => EXIT_VALIDATION,
            ErrorClass::Numeric => EXIT_NUMERIC,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure { code: EXIT_VALIDATION, message: e.to_string() }
    }
}

/// Everything a subcommand produces. Nothing touches the output directory
/// until the command has fully succeeded.
#[derive(Debug, Default)]
pub struct Output {
    pub files: Vec<ExportFile>,
    pub stdout: String,
    /// Set when the command ran but its checks did not hold.
    pub failure: Option<Failure>,
}

impl Output {
    pub fn file(&mut self, name: impl Into<String>, contents: impl Into<String>) {
        self.files.push(ExportFile { name: name.into(), contents: contents.into() });
    }

    pub fn json<T: serde::Serialize>(&mut self, name: &str, value: &T) -> Result<(), Failure> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.file(name, text);
        Ok(())
    }

    pub fn say(&mut self, line: impl AsRef<str>) {
        self.stdout.push_str(line.as_ref());
        if !self.stdout.ends_with('\n') {
            self.stdout.push('\n');
        }
    }

    /// Stage every file next to its destination, then rename them into
    /// place. A failed write removes whatever was staged; a failed command
    /// writes nothing.
    pub fn commit(self, dir: &Path) -> Result<(), Failure> {
        let io = |e: std::io::Error, p: &Path| Failure {
            code: EXIT_VALIDATION,
            message: format!("{}: {e}", p.display()),
        };
        if let Some(failure) = self.failure {
            print!("{}", self.stdout);
            return Err(failure);
        }
        fs::create_dir_all(dir).map_err(|e| io(e, dir))?;
        let mut staged: Vec<(PathBuf, PathBuf)> = Vec::new();
        let cleanup = |staged: &[(PathBuf, PathBuf)]| {
            for (tmp, _) in staged {
                let _ = fs::remove_file(tmp);
            }
        };
        for f in &self.files {
            let dest = dir.join(&f.name);
            let tmp = dir.join(format!(".{}.partial-{}", f.name, std::process::id()));
            if let Err(e) = fs::write(&tmp, &f.contents) {
                cleanup(&staged);
                let _ = fs::remove_file(&tmp);
                return Err(io(e, &tmp));
            }
            staged.push((tmp, dest));
        }
        for (tmp, dest) in &staged {
            fs::rename(tmp, dest).map_err(|e| io(e, dest))?;
        }
        print!("{}", self.stdout);
        Ok(())
    }
}
