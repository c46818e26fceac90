//! Sources of repository activity: an offline store of JSON files and a live
//! REST forge client.
//!
//! The live client expects these endpoints below its base URL, each list
//! endpoint paginated with `page`/`per_page` and an optional
//! `Link: <url>; rel="next"` header:
//!
//! - `GET /repos/{owner}/{name}`: `{created_at, archived_at, readme_deprecated,
//!   readme_stable_declared, stars_total}`
//! - `GET /repos/{owner}/{name}/commits?since=&until=`: `[{date, author}]`
//! - `GET /repos/{owner}/{name}/issues?since=&until=`:
//!   `[{opened_at, closed_at, first_response_hours}]`
//! - `GET /repos/{owner}/{name}/releases`: `[{published_at}]`

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration as StdDuration, Instant};

use chrono::{DateTime, Duration, NaiveDate};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use super::activity::{week_start_of, ActivityTimeSeries, RepoRef, WeekBucket};
use crate::error::{Error, Result};

pub const TOKEN_ENV: &str = "DEPWATCH_TOKEN";

/// Inclusive date range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DateWindow {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl DateWindow {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Result<Self> {
        if start > end {
            return Err(Error::validation(format!("window start {start} after end {end}")));
        }
        Ok(Self { start, end })
    }

    /// `days` days back from `end`, inclusive of both ends.
    pub fn trailing(end: NaiveDate, days: i64) -> Self {
        Self {
            start: end - Duration::days(days),
            end,
        }
    }
}

pub trait ActivityProvider: Send + Sync {
    fn fetch_activity(&self, repo: &RepoRef, window: &DateWindow) -> Result<ActivityTimeSeries>;
}

/// Activity files laid out as `<root>/<host>/<owner>/<name>.activity.json`.
#[derive(Debug, Clone)]
pub struct OfflineStore {
    root: PathBuf,
}

impl OfflineStore {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path_for(&self, repo: &RepoRef) -> PathBuf {
        self.root
            .join(&repo.host)
            .join(&repo.owner)
            .join(format!("{}.activity.json", repo.name))
    }

    /// The stored series exactly as written, without clipping.
    pub fn load(&self, repo: &RepoRef) -> Result<ActivityTimeSeries> {
        repo.validate()?;
        let path = self.path_for(repo);
        let bytes = match std::fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(Error::NotFound(format!("{repo} (no {})", path.display())))
            }
            Err(e) => return Err(Error::io(&path, e)),
        };
        let series = ActivityTimeSeries::from_json(&bytes)?;
        if &series.repo != repo {
            return Err(Error::validation(format!(
                "{} describes {} instead of {repo}",
                path.display(),
                series.repo
            )));
        }
        Ok(series)
    }

    pub fn store(&self, series: &ActivityTimeSeries) -> Result<PathBuf> {
        let path = self.path_for(&series.repo);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        std::fs::write(&path, series.to_json() + "\n").map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

impl ActivityProvider for OfflineStore {
    fn fetch_activity(&self, repo: &RepoRef, window: &DateWindow) -> Result<ActivityTimeSeries> {
        Ok(self.load(repo)?.clip_to(window.start, window.end))
    }
}

/// Blocking token bucket shared by all workers using one provider.
#[derive(Debug)]
pub struct TokenBucket {
    capacity: f64,
    per_second: f64,
    state: Mutex<(f64, Instant)>,
}

impl TokenBucket {
    pub fn new(capacity: u32, per_second: f64) -> Self {
        assert!(capacity > 0 && per_second > 0.0, "token bucket needs positive capacity and rate");
        Self {
            capacity: capacity as f64,
            per_second,
            state: Mutex::new((capacity as f64, Instant::now())),
        }
    }

    pub fn acquire(&self) {
        loop {
            let wait = {
                let mut state = self.state.lock().expect("token bucket poisoned");
                let now = Instant::now();
                let refill = now.duration_since(state.1).as_secs_f64() * self.per_second;
                state.0 = (state.0 + refill).min(self.capacity);
                state.1 = now;
                if state.0 >= 1.0 {
                    state.0 -= 1.0;
                    return;
                }
                (1.0 - state.0) / self.per_second
            };
            std::thread::sleep(StdDuration::from_secs_f64(wait));
        }
    }
}

#[derive(Debug)]
pub struct LiveProvider {
    base_url: String,
    token: Option<String>,
    client: reqwest::blocking::Client,
    per_page: u32,
    /// Retries after a 429 before surfacing [`Error::RateLimited`].
    pub max_retries: u32,
    /// Longest `Retry-After` we are willing to sleep through.
    pub max_retry_wait: StdDuration,
    limiter: Option<TokenBucket>,
}

#[derive(Deserialize)]
struct RepoMeta {
    created_at: String,
    #[serde(default)]
    archived_at: Option<String>,
    #[serde(default)]
    readme_deprecated: bool,
    #[serde(default)]
    readme_stable_declared: bool,
    #[serde(default)]
    stars_total: u32,
}

#[derive(Deserialize)]
struct CommitEvent {
    date: String,
    author: String,
}

#[derive(Deserialize)]
struct IssueEvent {
    opened_at: String,
    #[serde(default)]
    closed_at: Option<String>,
    #[serde(default)]
    first_response_hours: Option<f64>,
}

#[derive(Deserialize)]
struct ReleaseEvent {
    published_at: String,
}

impl LiveProvider {
    pub fn new(base_url: &str, token: Option<String>) -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .timeout(StdDuration::from_secs(30))
            .user_agent(concat!("depwatch/", env!("CARGO_PKG_VERSION")))
            .build()
            .map_err(|e| Error::Transport(e.to_string()))?;
        Ok(Self {
            base_url: base_url.trim_end_matches('/').to_string(),
            token,
            client,
            per_page: 100,
            max_retries: 2,
            max_retry_wait: StdDuration::from_secs(120),
            limiter: None,
        })
    }

    /// Reads the auth token from `DEPWATCH_TOKEN` when set.
    pub fn from_env(base_url: &str) -> Result<Self> {
        Self::new(base_url, std::env::var(TOKEN_ENV).ok().filter(|t| !t.is_empty()))
    }

    pub fn with_rate_limit(mut self, bucket: TokenBucket) -> Self {
        self.limiter = Some(bucket);
        self
    }

    pub fn with_page_size(mut self, per_page: u32) -> Self {
        self.per_page = per_page.max(1);
        self
    }

    fn get(&self, url: &str) -> Result<reqwest::blocking::Response> {
        let mut attempt = 0;
        loop {
            if let Some(limiter) = &self.limiter {
                limiter.acquire();
            }
            let mut req = self.client.get(url).header("Accept", "application/json");
            if let Some(token) = &self.token {
                req = req.bearer_auth(token);
            }
            let resp = req.send().map_err(|e| Error::Transport(e.to_string()))?;
            let status = resp.status();
            if status.is_success() {
                return Ok(resp);
            }
            match status.as_u16() {
                404 => return Err(Error::NotFound(url.to_string())),
                429 => {
                    let retry_after_secs = resp
                        .headers()
                        .get("retry-after")
                        .and_then(|v| v.to_str().ok())
                        .and_then(|v| v.trim().parse::<u64>().ok())
                        .unwrap_or(60);
                    let wait = StdDuration::from_secs(retry_after_secs);
                    if attempt >= self.max_retries || wait > self.max_retry_wait {
                        return Err(Error::RateLimited { retry_after_secs });
                    }
                    log::warn!("rate limited on {url}, retrying in {retry_after_secs}s");
                    std::thread::sleep(wait);
                    attempt += 1;
                }
                code => return Err(Error::Transport(format!("HTTP {code} from {url}"))),
            }
        }
    }

    fn get_json<T: DeserializeOwned>(&self, url: &str) -> Result<T> {
        let body = self.get(url)?.bytes().map_err(|e| Error::Transport(e.to_string()))?;
        serde_json::from_slice(&body).map_err(|e| Error::Transport(format!("bad JSON from {url}: {e}")))
    }

    fn get_all_pages<T: DeserializeOwned>(&self, first: String) -> Result<Vec<T>> {
        const MAX_PAGES: usize = 10_000;
        let mut items = Vec::new();
        let mut next = Some(first);
        let mut pages = 0;
        while let Some(url) = next.take() {
            pages += 1;
            if pages > MAX_PAGES {
                return Err(Error::Transport(format!("pagination did not terminate at {url}")));
            }
            let resp = self.get(&url)?;
            next = resp
                .headers()
                .get("link")
                .and_then(|v| v.to_str().ok())
                .and_then(next_link)
                .map(|link| self.absolutize(&link));
            let body = resp.bytes().map_err(|e| Error::Transport(e.to_string()))?;
            let page: Vec<T> = serde_json::from_slice(&body)
                .map_err(|e| Error::Transport(format!("bad JSON from {url}: {e}")))?;
            items.extend(page);
        }
        Ok(items)
    }

    fn absolutize(&self, link: &str) -> String {
        if link.starts_with("http://") || link.starts_with("https://") {
            link.to_string()
        } else {
            format!("{}/{}", self.base_url, link.trim_start_matches('/'))
        }
    }

    fn repo_url(&self, repo: &RepoRef) -> String {
        format!("{}/repos/{}/{}", self.base_url, repo.owner, repo.name)
    }
}

/// Extracts the `rel="next"` target from an RFC 8288 `Link` header.
fn next_link(header: &str) -> Option<String> {
    header.split(',').find_map(|part| {
        let (target, params) = part.split_once(';')?;
        let is_next = params
            .split(';')
            .any(|p| p.trim().replace(' ', "") == "rel=\"next\"" || p.trim() == "rel=next");
        is_next.then(|| target.trim().trim_start_matches('<').trim_end_matches('>').to_string())
    })
}

/// Accepts `YYYY-MM-DD` or an RFC 3339 timestamp, returning the UTC date.
pub(crate) fn parse_day(s: &str) -> Result<NaiveDate> {
    if let Ok(d) = s.parse::<NaiveDate>() {
        return Ok(d);
    }
    DateTime::parse_from_rfc3339(s)
        .map(|dt| dt.naive_utc().date())
        .map_err(|_| Error::Transport(format!("unparseable timestamp {s:?}")))
}

impl ActivityProvider for LiveProvider {
    fn fetch_activity(&self, repo: &RepoRef, window: &DateWindow) -> Result<ActivityTimeSeries> {
        repo.validate()?;
        let base = self.repo_url(repo);
        let meta: RepoMeta = self.get_json(&base)?;
        let created_at = parse_day(&meta.created_at)?;
        let range = format!("since={}&until={}&per_page={}&page=1", window.start, window.end, self.per_page);
        let commits: Vec<CommitEvent> = self.get_all_pages(format!("{base}/commits?{range}"))?;
        let issues: Vec<IssueEvent> = self.get_all_pages(format!("{base}/issues?{range}"))?;
        let releases: Vec<ReleaseEvent> =
            self.get_all_pages(format!("{base}/releases?per_page={}&page=1", self.per_page))?;

        let first = week_start_of(window.start).max(week_start_of(created_at));
        let last = week_start_of(window.end);
        let mut weeks: BTreeMap<NaiveDate, WeekBucket> = BTreeMap::new();
        let mut cursor = first;
        while cursor <= last {
            weeks.insert(cursor, WeekBucket::empty(cursor, meta.stars_total));
            cursor += Duration::days(7);
        }
        let in_window = |d: NaiveDate| d >= window.start && d <= window.end;

        for c in &commits {
            let day = parse_day(&c.date)?;
            if !in_window(day) {
                continue;
            }
            if let Some(w) = weeks.get_mut(&week_start_of(day)) {
                w.commits += 1;
                *w.authors.entry(c.author.clone()).or_default() += 1;
                w.active_contributors = w.authors.len() as u32;
            }
        }
        let mut samples = Vec::new();
        for issue in &issues {
            let opened = parse_day(&issue.opened_at)?;
            if in_window(opened) {
                if let Some(w) = weeks.get_mut(&week_start_of(opened)) {
                    w.issues_opened += 1;
                }
                if let Some(h) = issue.first_response_hours {
                    samples.push(h);
                }
            }
            if let Some(closed) = issue.closed_at.as_deref().map(parse_day).transpose()? {
                if in_window(closed) {
                    if let Some(w) = weeks.get_mut(&week_start_of(closed)) {
                        w.issues_closed += 1;
                    }
                }
            }
        }
        let mut release_days = releases
            .iter()
            .map(|r| parse_day(&r.published_at))
            .collect::<Result<Vec<_>>>()?;
        release_days.retain(|d| in_window(*d));
        release_days.sort();

        let series = ActivityTimeSeries {
            repo: repo.clone(),
            created_at,
            weeks: weeks.into_values().collect(),
            releases: release_days,
            issue_response_samples: samples,
            archived_at: meta.archived_at.as_deref().map(parse_day).transpose()?,
            readme_deprecated: meta.readme_deprecated,
            readme_stable_declared: meta.readme_stable_declared,
        };
        series.validate()?;
        Ok(series)
    }
}

/// Fetches every repo with at most `parallelism` concurrent requests.
/// Results come back in input order regardless of completion order.
pub fn fetch_all<P: ActivityProvider + ?Sized>(
    provider: &P,
    repos: &[RepoRef],
    window: &DateWindow,
    parallelism: usize,
) -> Vec<Result<ActivityTimeSeries>> {
    let workers = parallelism.clamp(1, repos.len().max(1));
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Result<ActivityTimeSeries>>>> = repos.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(repo) = repos.get(i) else { break };
                let result = provider.fetch_activity(repo, window);
                *slots[i].lock().expect("result slot poisoned") = Some(result);
            });
        }
    });
    slots
        .into_iter()
        .map(|s| s.into_inner().expect("result slot poisoned").expect("every slot filled"))
        .collect()
}
