//! Offline fixtures and the live provider against a local HTTP server.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use chrono::NaiveDate;
use depwatch_core::metrics::{
    compute_features, ActivityProvider, ActivityTimeSeries, DateWindow, LiveProvider, OfflineStore, RepoRef,
    WeekBucket,
};
use depwatch_core::Error;

const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures");

fn d(s: &str) -> NaiveDate {
    s.parse().unwrap()
}

#[test]
fn repo_a_round_trips() {
    let raw = std::fs::read(format!("{FIXTURES}/repoA.activity.json")).unwrap();
    let series = ActivityTimeSeries::from_json(&raw).unwrap();
    let original: serde_json::Value = serde_json::from_slice(&raw).unwrap();
    let written: serde_json::Value = serde_json::from_str(&series.to_json()).unwrap();
    assert_eq!(original, written);
}

#[test]
fn repo_a_commits_90d_matches_hand_count() {
    let raw = std::fs::read(format!("{FIXTURES}/repoA.activity.json")).unwrap();
    let series = ActivityTimeSeries::from_json(&raw).unwrap();
    let fv = compute_features(&series, d("2023-06-05")).unwrap();
    // Week buckets starting 2023-03-13 .. 2023-06-05 (first Monday on or
    // after 2023-03-07): 1+6+2+3+0+5+1+0+0+7+2+4+0. The 2023-03-06 bucket
    // (3 commits) starts a day before the window and is excluded.
    assert_eq!(fv.commits_90d, 31.0);

    // Same tally straight from the JSON, independent of the library types.
    let doc: serde_json::Value = serde_json::from_slice(&raw).unwrap();
    let tally: u64 = doc["weeks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|w| {
            let s = w["week_start"].as_str().unwrap();
            ("2023-03-07"..="2023-06-05").contains(&s)
        })
        .map(|w| w["commits"].as_u64().unwrap())
        .sum();
    assert_eq!(tally, 31);
}

#[test]
fn offline_store_miss_is_not_found() {
    let store = OfflineStore::new(format!("{FIXTURES}/chain5.store"));
    let repo = RepoRef::new("github.com", "chain5", "does-not-exist").unwrap();
    let r = store.fetch_activity(&repo, &DateWindow::trailing(d("2024-01-01"), 365));
    assert!(matches!(r, Err(Error::NotFound(_))));
}

// ---- fixture forge server -------------------------------------------------

struct Route {
    status: u16,
    body: String,
    headers: Vec<(String, String)>,
}

type Handler = dyn Fn(&str, &[String]) -> Route + Send + Sync;

/// Serves one response per connection until the process exits.
fn serve(handler: Arc<Handler>) -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    std::thread::spawn(move || {
        for stream in listener.incoming().flatten() {
            let h = handler.clone();
            std::thread::spawn(move || respond(stream, &*h));
        }
    });
    format!("http://{addr}")
}

fn respond(mut stream: TcpStream, handler: &Handler) {
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut request_line = String::new();
    if reader.read_line(&mut request_line).is_err() {
        return;
    }
    let mut headers = Vec::new();
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line).unwrap_or(0) == 0 || line == "\r\n" {
            break;
        }
        headers.push(line.trim().to_ascii_lowercase());
    }
    let target = request_line.split_whitespace().nth(1).unwrap_or("/").to_string();
    let route = handler(&target, &headers);
    let reason = match route.status {
        200 => "OK",
        404 => "Not Found",
        429 => "Too Many Requests",
        _ => "Error",
    };
    let mut head = format!(
        "HTTP/1.1 {} {reason}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n",
        route.status,
        route.body.len()
    );
    for (k, v) in &route.headers {
        head.push_str(&format!("{k}: {v}\r\n"));
    }
    head.push_str("\r\n");
    let _ = stream.write_all(head.as_bytes());
    let _ = stream.write_all(route.body.as_bytes());
}

fn ok(body: serde_json::Value) -> Route {
    Route {
        status: 200,
        body: body.to_string(),
        headers: vec![],
    }
}

fn query_param<'a>(target: &'a str, key: &str) -> Option<&'a str> {
    target
        .split_once('?')?
        .1
        .split('&')
        .find_map(|kv| kv.strip_prefix(key)?.strip_prefix('='))
}

/// Ten commits over three pages, three issues, two releases.
fn widget_commits() -> Vec<serde_json::Value> {
    let raw = [
        ("2023-05-01T09:00:00Z", "ann"),
        ("2023-05-02T10:00:00Z", "ben"),
        ("2023-05-03T11:00:00Z", "ann"),
        ("2023-05-10T12:00:00Z", "ann"),
        ("2023-05-24T08:30:00Z", "cat"),
        ("2023-05-25T08:30:00Z", "ben"),
        ("2023-05-28T23:59:59Z", "ann"),
        ("2023-06-12T00:00:00Z", "ann"),
        ("2023-06-13T00:00:00Z", "dan"),
        ("2023-06-18", "ann"),
    ];
    raw.iter()
        .map(|(date, author)| serde_json::json!({"date": date, "author": author}))
        .collect()
}

fn widget_server(rate_limit_once: bool) -> (String, Arc<AtomicUsize>, Arc<Mutex<Vec<String>>>) {
    let hits_429 = Arc::new(AtomicUsize::new(0));
    let auth_seen = Arc::new(Mutex::new(Vec::new()));
    let (h, a) = (hits_429.clone(), auth_seen.clone());
    let limited_once = Arc::new(AtomicUsize::new(0));
    let handler: Arc<Handler> = Arc::new(move |target: &str, headers: &[String]| {
        if let Some(auth) = headers.iter().find(|l| l.starts_with("authorization:")) {
            a.lock().unwrap().push(auth.clone());
        }
        let path = target.split('?').next().unwrap();
        match path {
            "/repos/acme/widget" => ok(serde_json::json!({
                "created_at": "2023-04-20T12:00:00Z",
                "archived_at": null,
                "readme_deprecated": false,
                "readme_stable_declared": true,
                "stars_total": 42
            })),
            "/repos/acme/widget/commits" => {
                let page: usize = query_param(target, "page").unwrap().parse().unwrap();
                if page == 2 && rate_limit_once && limited_once.fetch_add(1, Ordering::SeqCst) == 0 {
                    h.fetch_add(1, Ordering::SeqCst);
                    return Route {
                        status: 429,
                        body: "{}".into(),
                        headers: vec![("Retry-After".into(), "0".into())],
                    };
                }
                let all = widget_commits();
                let chunk: Vec<_> = all.chunks(4).nth(page - 1).unwrap_or(&[]).to_vec();
                let mut route = ok(serde_json::Value::Array(chunk));
                if page < 3 {
                    let next = target.replace(&format!("page={page}"), &format!("page={}", page + 1));
                    route.headers.push(("Link".into(), format!("<{next}>; rel=\"next\"")));
                }
                route
            }
            "/repos/acme/widget/issues" => ok(serde_json::json!([
                {"opened_at": "2023-05-02", "closed_at": "2023-05-09", "first_response_hours": 4.5},
                {"opened_at": "2023-05-30", "closed_at": null, "first_response_hours": 30.0},
                {"opened_at": "2023-06-14", "closed_at": "2023-06-15"}
            ])),
            "/repos/acme/widget/releases" => ok(serde_json::json!([
                {"published_at": "2023-05-15T00:00:00Z"},
                {"published_at": "2023-06-16"}
            ])),
            "/repos/acme/throttled" => Route {
                status: 429,
                body: "{}".into(),
                headers: vec![("Retry-After".into(), "7".into())],
            },
            _ => Route {
                status: 404,
                body: "{}".into(),
                headers: vec![],
            },
        }
    });
    (serve(handler), hits_429, auth_seen)
}

/// The widget events bucketed by hand.
fn widget_expected() -> ActivityTimeSeries {
    let week = |start: &str, commits: u32, authors: &[(&str, u32)], opened: u32, closed: u32| WeekBucket {
        week_start: d(start),
        commits,
        active_contributors: authors.len() as u32,
        issues_opened: opened,
        issues_closed: closed,
        stars_total: 42,
        authors: authors.iter().map(|(a, n)| (a.to_string(), *n)).collect::<BTreeMap<_, _>>(),
    };
    ActivityTimeSeries {
        repo: RepoRef::new("forge.test", "acme", "widget").unwrap(),
        created_at: d("2023-04-20"),
        weeks: vec![
            week("2023-04-17", 0, &[], 0, 0),
            week("2023-04-24", 0, &[], 0, 0),
            week("2023-05-01", 3, &[("ann", 2), ("ben", 1)], 1, 0),
            week("2023-05-08", 1, &[("ann", 1)], 0, 1),
            week("2023-05-15", 0, &[], 0, 0),
            week("2023-05-22", 3, &[("ann", 1), ("ben", 1), ("cat", 1)], 0, 0),
            week("2023-05-29", 0, &[], 1, 0),
            week("2023-06-05", 0, &[], 0, 0),
            week("2023-06-12", 3, &[("ann", 2), ("dan", 1)], 1, 1),
            week("2023-06-19", 0, &[], 0, 0),
        ],
        releases: vec![d("2023-05-15"), d("2023-06-16")],
        issue_response_samples: vec![4.5, 30.0],
        archived_at: None,
        readme_deprecated: false,
        readme_stable_declared: true,
    }
}

fn window() -> DateWindow {
    DateWindow::new(d("2023-04-01"), d("2023-06-20")).unwrap()
}

#[test]
fn live_provider_follows_pagination() {
    let (base, _, auth) = widget_server(false);
    let provider = LiveProvider::new(&base, Some("s3cret".into())).unwrap().with_page_size(4);
    let repo = RepoRef::new("forge.test", "acme", "widget").unwrap();
    let got = provider.fetch_activity(&repo, &window()).unwrap();
    assert_eq!(got, widget_expected());
    assert_eq!(got.weeks.iter().map(|w| w.commits).sum::<u32>(), 10);
    let auth = auth.lock().unwrap();
    assert!(!auth.is_empty() && auth.iter().all(|h| h == "authorization: bearer s3cret"));
}

#[test]
fn live_and_offline_ingestion_agree() {
    let (base, _, _) = widget_server(false);
    let provider = LiveProvider::new(&base, None).unwrap().with_page_size(4);
    let repo = RepoRef::new("forge.test", "acme", "widget").unwrap();
    let live = provider.fetch_activity(&repo, &window()).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let store = OfflineStore::new(dir.path());
    store.store(&widget_expected()).unwrap();
    let offline = store.fetch_activity(&repo, &window()).unwrap();
    assert_eq!(live, offline);
}

#[test]
fn live_provider_retries_after_429() {
    let (base, hits, _) = widget_server(true);
    let provider = LiveProvider::new(&base, None).unwrap().with_page_size(4);
    let repo = RepoRef::new("forge.test", "acme", "widget").unwrap();
    let got = provider.fetch_activity(&repo, &window()).unwrap();
    assert_eq!(hits.load(Ordering::SeqCst), 1);
    assert_eq!(got, widget_expected());
}

#[test]
fn live_provider_surfaces_rate_limit_and_not_found() {
    let (base, _, _) = widget_server(false);
    let mut provider = LiveProvider::new(&base, None).unwrap();
    provider.max_retries = 0;
    let throttled = RepoRef::new("forge.test", "acme", "throttled").unwrap();
    match provider.fetch_activity(&throttled, &window()) {
        Err(e @ Error::RateLimited { retry_after_secs: 7 }) => assert!(e.is_retryable()),
        other => panic!("expected rate limit, got {other:?}"),
    }
    let missing = RepoRef::new("forge.test", "acme", "nope").unwrap();
    assert!(matches!(provider.fetch_activity(&missing, &window()), Err(Error::NotFound(_))));
}

#[test]
fn unreachable_forge_is_a_transport_error() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    drop(listener);
    let provider = LiveProvider::new(&format!("http://{addr}"), None).unwrap();
    let repo = RepoRef::new("forge.test", "acme", "widget").unwrap();
    assert!(matches!(provider.fetch_activity(&repo, &window()), Err(Error::Transport(_))));
}
