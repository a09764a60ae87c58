//! [`VcsBackend`] over a real git repository, driven through plumbing
//! commands. Only the object database and `refs/heads/*` are touched; the
//! working tree and index of the repository are left alone.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};

use super::{CommitId, CommitMeta, Snapshot, VcsBackend, VcsError};

#[derive(Debug, Clone)]
pub struct GitBackend {
    repo: PathBuf,
}

fn backend_err(e: impl std::fmt::Display) -> VcsError {
    VcsError::Backend(e.to_string())
}

impl GitBackend {
    /// Opens an existing repository rooted at (or containing) `repo`.
    pub fn open(repo: impl Into<PathBuf>) -> Result<Self, VcsError> {
        let backend = GitBackend { repo: repo.into() };
        backend.git(&["rev-parse", "--git-dir"], None, &[])?;
        Ok(backend)
    }

    /// Initializes a repository at `repo` unless `repo/.git` already exists.
    /// An enclosing repository is not reused.
    pub fn init(repo: impl Into<PathBuf>) -> Result<Self, VcsError> {
        let repo = repo.into();
        std::fs::create_dir_all(&repo).map_err(backend_err)?;
        if !repo.join(".git").exists() {
            let out = Command::new("git")
                .arg("init")
                .arg("-q")
                .arg(&repo)
                .output()
                .map_err(backend_err)?;
            if !out.status.success() {
                return Err(backend_err(String::from_utf8_lossy(&out.stderr)));
            }
        }
        Self::open(repo)
    }

    pub fn path(&self) -> &Path {
        &self.repo
    }

    fn git_raw(&self, args: &[&str], stdin: Option<&[u8]>, env: &[(&str, &str)]) -> Result<Vec<u8>, VcsError> {
        let mut cmd = Command::new("git");
        cmd.arg("-C").arg(&self.repo).args(args);
        for (k, v) in env {
            cmd.env(k, v);
        }
        cmd.stdin(if stdin.is_some() { Stdio::piped() } else { Stdio::null() })
            .stdout(Stdio::piped())
            .stderr(Stdio::piped());
        let mut child = cmd.spawn().map_err(backend_err)?;
        if let Some(input) = stdin {
            let mut pipe = child.stdin.take().expect("stdin piped");
            pipe.write_all(input).map_err(backend_err)?;
        }
        let out = child.wait_with_output().map_err(backend_err)?;
        if !out.status.success() {
            return Err(VcsError::Backend(format!(
                "git {}: {}",
                args.join(" "),
                String::from_utf8_lossy(&out.stderr).trim()
            )));
        }
        Ok(out.stdout)
    }

    fn git(&self, args: &[&str], stdin: Option<&[u8]>, env: &[(&str, &str)]) -> Result<String, VcsError> {
        let out = self.git_raw(args, stdin, env)?;
        String::from_utf8(out).map_err(backend_err)
    }

    fn write_blob(&self, lines: &[String]) -> Result<String, VcsError> {
        let text = super::lines_to_text(lines);
        Ok(self
            .git(&["hash-object", "-w", "--stdin"], Some(text.as_bytes()), &[])?
            .trim()
            .to_owned())
    }

    fn write_tree(&self, snapshot: &Snapshot) -> Result<String, VcsError> {
        let mut index_info = String::new();
        for (path, lines) in snapshot {
            let blob = self.write_blob(lines)?;
            index_info.push_str(&format!("100644 {blob}\t{path}\n"));
        }
        let index = tempfile::NamedTempFile::new().map_err(backend_err)?;
        let index_path = index.path().to_string_lossy().into_owned();
        // git refuses an empty existing file as an index; start from nothing.
        std::fs::remove_file(&index_path).map_err(backend_err)?;
        let env = [("GIT_INDEX_FILE", index_path.as_str())];
        self.git(&["update-index", "--add", "--index-info"], Some(index_info.as_bytes()), &env)?;
        let tree = self.git(&["write-tree"], None, &env)?.trim().to_owned();
        let _ = std::fs::remove_file(&index_path);
        Ok(tree)
    }

    fn read_commit(&self, id: &CommitId) -> Result<String, VcsError> {
        if !self.contains(id) {
            return Err(VcsError::UnknownCommit(id.clone()));
        }
        self.git(&["cat-file", "commit", id.as_str()], None, &[])
    }
}

impl VcsBackend for GitBackend {
    type Checkpoint = BTreeMap<String, CommitId>;

    fn resolve_branch(&self, name: &str) -> Option<CommitId> {
        let refname = format!("refs/heads/{name}^{{commit}}");
        self.git(&["rev-parse", "--verify", "-q", &refname], None, &[])
            .ok()
            .map(|s| CommitId(s.trim().to_owned()))
    }

    fn branches(&self) -> Vec<(String, CommitId)> {
        let out = self
            .git(&["for-each-ref", "--format=%(objectname) %(refname)", "refs/heads/"], None, &[])
            .unwrap_or_default();
        out.lines()
            .filter_map(|l| {
                let (id, refname) = l.split_once(' ')?;
                let name = refname.strip_prefix("refs/heads/")?;
                Some((name.to_owned(), CommitId(id.to_owned())))
            })
            .collect()
    }

    fn set_branch(&mut self, name: &str, target: &CommitId) -> Result<(), VcsError> {
        if self.git(&["check-ref-format", "--branch", name], None, &[]).is_err() {
            return Err(VcsError::InvalidBranchName(name.to_owned()));
        }
        if !self.contains(target) {
            return Err(VcsError::UnknownCommit(target.clone()));
        }
        let refname = format!("refs/heads/{name}");
        self.git(&["update-ref", &refname, target.as_str()], None, &[])?;
        Ok(())
    }

    fn commit(
        &mut self,
        parents: &[CommitId],
        snapshot: Snapshot,
        message: &str,
        author: &str,
    ) -> Result<CommitId, VcsError> {
        for p in parents {
            if !self.contains(p) {
                return Err(VcsError::UnknownCommit(p.clone()));
            }
        }
        let tree = self.write_tree(&snapshot)?;
        let mut args = vec!["commit-tree".to_owned(), tree];
        for p in parents {
            args.push("-p".to_owned());
            args.push(p.0.clone());
        }
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let email = format!("{author}@pbl-inspect.invalid");
        let env = [
            ("GIT_AUTHOR_NAME", author),
            ("GIT_AUTHOR_EMAIL", email.as_str()),
            ("GIT_COMMITTER_NAME", author),
            ("GIT_COMMITTER_EMAIL", email.as_str()),
        ];
        let id = self.git(&args, Some(message.as_bytes()), &env)?;
        Ok(CommitId(id.trim().to_owned()))
    }

    fn contains(&self, id: &CommitId) -> bool {
        let spec = format!("{}^{{commit}}", id.as_str());
        !id.as_str().is_empty()
            && id.as_str().bytes().all(|b| b.is_ascii_hexdigit())
            && self.git(&["cat-file", "-e", &spec], None, &[]).is_ok()
    }

    fn commit_meta(&self, id: &CommitId) -> Result<CommitMeta, VcsError> {
        let raw = self.read_commit(id)?;
        let (headers, message) = raw.split_once("\n\n").unwrap_or((raw.as_str(), ""));
        let mut parents = Vec::new();
        let mut author = String::new();
        for h in headers.lines() {
            if let Some(p) = h.strip_prefix("parent ") {
                parents.push(CommitId(p.trim().to_owned()));
            } else if let Some(a) = h.strip_prefix("author ") {
                author = a.split(" <").next().unwrap_or_default().to_owned();
            }
        }
        Ok(CommitMeta {
            parents,
            message: message.to_owned(),
            author,
        })
    }

    fn snapshot(&self, id: &CommitId) -> Result<Snapshot, VcsError> {
        if !self.contains(id) {
            return Err(VcsError::UnknownCommit(id.clone()));
        }
        let listing = self.git_raw(&["ls-tree", "-r", "-z", id.as_str()], None, &[])?;
        let mut snapshot = Snapshot::new();
        for entry in listing.split(|&b| b == 0).filter(|e| !e.is_empty()) {
            let entry = String::from_utf8_lossy(entry);
            let (meta, path) = entry
                .split_once('\t')
                .ok_or_else(|| backend_err(format!("malformed ls-tree entry {entry}")))?;
            let blob = meta.split_whitespace().nth(2).unwrap_or_default();
            let text = self.git(&["cat-file", "blob", blob], None, &[])?;
            snapshot.insert(path.to_owned(), super::text_to_lines(&text));
        }
        Ok(snapshot)
    }

    fn checkpoint(&self) -> Self::Checkpoint {
        self.branches().into_iter().collect()
    }

    fn rollback(&mut self, checkpoint: Self::Checkpoint) {
        for (name, _) in self.branches() {
            if !checkpoint.contains_key(&name) {
                let refname = format!("refs/heads/{name}");
                let _ = self.git(&["update-ref", "-d", &refname], None, &[]);
            }
        }
        for (name, id) in checkpoint {
            let _ = self.set_branch(&name, &id);
        }
    }
}

/// Whether a usable `git` executable is on `PATH`.
pub fn git_available() -> bool {
    Command::new("git")
        .arg("--version")
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}
