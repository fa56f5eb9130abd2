//! Wayback Machine availability lookups.
//!
//! `GET https://archive.org/wayback/available?url=<url>` answers with the
//! closest archived snapshot:
//!
//! ```json
//! {"archived_snapshots": {"closest": {"available": true, "url": "...", "timestamp": "20240101123456"}}}
//! ```
//!
//! or `{"archived_snapshots": {}}` when nothing is stored. Any transport or
//! decoding problem is reported as [`ArchiveStatus::LookupFailed`], which is
//! kept distinct from "not archived" so the UI can offer a retry.

use std::collections::HashMap;
use std::sync::Arc;
use std::time::Duration;

use async_trait::async_trait;
use parking_lot::Mutex;
use percent_encoding::{utf8_percent_encode, AsciiSet, NON_ALPHANUMERIC};
use serde::{Deserialize, Serialize};
use tokio::sync::Semaphore;
use tokio::time::Instant;

pub const AVAILABILITY_ENDPOINT: &str = "https://archive.org/wayback/available";
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(5);
pub const CACHE_TTL: Duration = Duration::from_secs(60 * 60);
pub const MAX_CONCURRENT_LOOKUPS: usize = 4;

const QUERY_VALUE: &AsciiSet = &NON_ALPHANUMERIC
    .remove(b'-')
    .remove(b'.')
    .remove(b'_')
    .remove(b'~');

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArchiveStatus {
    Archived,
    NotArchived,
    LookupFailed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchiveLookup {
    pub status: ArchiveStatus,
    pub snapshot_url: Option<String>,
    /// `YYYYMMDDhhmmss`.
    pub snapshot_timestamp: Option<String>,
}

impl ArchiveLookup {
    pub fn not_archived() -> Self {
        Self {
            status: ArchiveStatus::NotArchived,
            snapshot_url: None,
            snapshot_timestamp: None,
        }
    }

    pub fn failed() -> Self {
        Self {
            status: ArchiveStatus::LookupFailed,
            snapshot_url: None,
            snapshot_timestamp: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub body: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TransportError {
    #[error("request timed out")]
    Timeout,
    #[error("connection failed: {0}")]
    Connect(String),
    #[error("request failed: {0}")]
    Other(String),
}

/// Minimal HTTP GET, so lookups can run against recorded responses.
#[async_trait]
pub trait Transport: Send + Sync {
    async fn get(&self, url: &str, timeout: Duration) -> Result<HttpResponse, TransportError>;
}

/// [`Transport`] backed by `reqwest`.
#[derive(Debug, Clone, Default)]
pub struct ReqwestTransport {
    client: reqwest::Client,
}

impl ReqwestTransport {
    pub fn new() -> Self {
        Self::default()
    }
}

#[async_trait]
impl Transport for ReqwestTransport {
    async fn get(&self, url: &str, timeout: Duration) -> Result<HttpResponse, TransportError> {
        let classify = |e: reqwest::Error| {
            if e.is_timeout() {
                TransportError::Timeout
            } else if e.is_connect() {
                TransportError::Connect(e.to_string())
            } else {
                TransportError::Other(e.to_string())
            }
        };
        let resp = self
            .client
            .get(url)
            .timeout(timeout)
            .send()
            .await
            .map_err(classify)?;
        let status = resp.status().as_u16();
        let body = resp.bytes().await.map_err(classify)?.to_vec();
        Ok(HttpResponse { status, body })
    }
}

#[derive(Deserialize)]
struct AvailabilityBody {
    archived_snapshots: ArchivedSnapshots,
}

#[derive(Deserialize)]
struct ArchivedSnapshots {
    closest: Option<ClosestSnapshot>,
}

#[derive(Deserialize)]
struct ClosestSnapshot {
    #[serde(default)]
    available: bool,
    url: Option<String>,
    timestamp: Option<String>,
}

/// Maps an availability response to a lookup result.
pub fn interpret_response(resp: &HttpResponse) -> ArchiveLookup {
    if resp.status != 200 {
        return ArchiveLookup::failed();
    }
    let Ok(body) = serde_json::from_slice::<AvailabilityBody>(&resp.body) else {
        return ArchiveLookup::failed();
    };
    match body.archived_snapshots.closest {
        None => ArchiveLookup::not_archived(),
        Some(ClosestSnapshot {
            available: false, ..
        }) => ArchiveLookup::not_archived(),
        Some(ClosestSnapshot { url: None, .. }) => ArchiveLookup::failed(),
        Some(ClosestSnapshot {
            url: Some(url),
            timestamp,
            ..
        }) => ArchiveLookup {
            status: ArchiveStatus::Archived,
            snapshot_url: Some(url),
            snapshot_timestamp: timestamp,
        },
    }
}

/// Availability request URL for a page URL.
pub fn availability_url(endpoint: &str, page_url: &str) -> String {
    format!(
        "{endpoint}?url={}",
        utf8_percent_encode(page_url, QUERY_VALUE)
    )
}

/// Caching, rate-limited availability client. Only definitive answers
/// (archived / not archived) are cached; failures are retried on the next
/// request.
pub struct WaybackClient {
    transport: Arc<dyn Transport>,
    endpoint: String,
    timeout: Duration,
    ttl: Duration,
    cache: Mutex<HashMap<String, (Instant, ArchiveLookup)>>,
    permits: Semaphore,
}

impl std::fmt::Debug for WaybackClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WaybackClient")
            .field("endpoint", &self.endpoint)
            .field("timeout", &self.timeout)
            .finish_non_exhaustive()
    }
}

impl WaybackClient {
    pub fn new(transport: Arc<dyn Transport>) -> Self {
        Self {
            transport,
            endpoint: AVAILABILITY_ENDPOINT.to_string(),
            timeout: DEFAULT_TIMEOUT,
            ttl: CACHE_TTL,
            cache: Mutex::new(HashMap::new()),
            permits: Semaphore::new(MAX_CONCURRENT_LOOKUPS),
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn with_endpoint(mut self, endpoint: impl Into<String>) -> Self {
        self.endpoint = endpoint.into();
        self
    }

    pub fn with_ttl(mut self, ttl: Duration) -> Self {
        self.ttl = ttl;
        self
    }

    fn cached(&self, url: &str) -> Option<ArchiveLookup> {
        let mut cache = self.cache.lock();
        match cache.get(url) {
            Some((at, hit)) if at.elapsed() < self.ttl => Some(hit.clone()),
            Some(_) => {
                cache.remove(url);
                None
            }
            None => None,
        }
    }

    /// Latest snapshot of `url`. Never errors; see [`ArchiveStatus`].
    pub async fn lookup(&self, url: &str) -> ArchiveLookup {
        if let Some(hit) = self.cached(url) {
            return hit;
        }
        let Ok(_permit) = self.permits.acquire().await else {
            return ArchiveLookup::failed();
        };
        // Another lookup may have filled the cache while we waited.
        if let Some(hit) = self.cached(url) {
            return hit;
        }
        let request = availability_url(&self.endpoint, url);
        let mut response = self.transport.get(&request, self.timeout).await;
        if matches!(response, Err(TransportError::Connect(_))) {
            response = self.transport.get(&request, self.timeout).await;
        }
        let result = match response {
            Ok(resp) => interpret_response(&resp),
            Err(e) => {
                tracing::debug!(url, error = %e, "wayback lookup failed");
                ArchiveLookup::failed()
            }
        };
        if result.status != ArchiveStatus::LookupFailed {
            self.cache
                .lock()
                .insert(url.to_string(), (Instant::now(), result.clone()));
        }
        result
    }
}
