//! Minimal blocking client for the W3C WebDriver HTTP protocol.

use std::time::Duration;

use base64::Engine;
use reqwest::blocking::{Client, RequestBuilder};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum WebDriverError {
    #[error("transport: {0}")]
    Transport(String),
    #[error("{error}: {message}")]
    Protocol { error: String, message: String },
    #[error("malformed response: {0}")]
    Malformed(String),
}

/// Endpoint and capabilities for one browser profile. The capabilities
/// document is passed through untouched (profile path, extensions, ...).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub endpoint: String,
    #[serde(default = "default_capabilities")]
    pub capabilities: Value,
}

fn default_capabilities() -> Value {
    json!({ "alwaysMatch": {} })
}

impl SessionConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        SessionConfig {
            endpoint: endpoint.into(),
            capabilities: default_capabilities(),
        }
    }

    pub fn with_capabilities(mut self, capabilities: Value) -> Self {
        self.capabilities = capabilities;
        self
    }
}

#[derive(Debug, Clone)]
pub struct WebDriverClient {
    http: Client,
    endpoint: String,
}

impl WebDriverClient {
    pub fn new(endpoint: &str, request_timeout: Duration) -> Result<Self, WebDriverError> {
        let http = Client::builder()
            .timeout(request_timeout)
            .build()
            .map_err(|e| WebDriverError::Transport(e.to_string()))?;
        Ok(WebDriverClient {
            http,
            endpoint: endpoint.trim_end_matches('/').to_string(),
        })
    }

    fn send(&self, request: RequestBuilder) -> Result<Value, WebDriverError> {
        let response = request
            .send()
            .map_err(|e| WebDriverError::Transport(e.to_string()))?;
        let status = response.status();
        let body: Value = response
            .json()
            .map_err(|e| WebDriverError::Malformed(e.to_string()))?;
        let value = body.get("value").cloned().unwrap_or(Value::Null);
        if let Some(error) = value.get("error").and_then(Value::as_str) {
            return Err(WebDriverError::Protocol {
                error: error.to_string(),
                message: value
                    .get("message")
                    .and_then(Value::as_str)
                    .unwrap_or_default()
                    .to_string(),
            });
        }
        if !status.is_success() {
            return Err(WebDriverError::Protocol {
                error: format!("http {}", status.as_u16()),
                message: body.to_string(),
            });
        }
        Ok(value)
    }

    fn url(&self, path: &str) -> String {
        format!("{}{path}", self.endpoint)
    }

    /// New Session. The returned handle must be closed with
    /// [`Session::delete`].
    pub fn new_session(&self, capabilities: &Value) -> Result<Session<'_>, WebDriverError> {
        let value = self.send(
            self.http
                .post(self.url("/session"))
                .json(&json!({ "capabilities": capabilities })),
        )?;
        let id = value
            .get("sessionId")
            .and_then(Value::as_str)
            .ok_or_else(|| WebDriverError::Malformed("missing sessionId".into()))?;
        Ok(Session {
            client: self,
            id: id.to_string(),
        })
    }
}

#[derive(Debug)]
pub struct Session<'a> {
    client: &'a WebDriverClient,
    id: String,
}

impl Session<'_> {
    pub fn id(&self) -> &str {
        &self.id
    }

    fn path(&self, suffix: &str) -> String {
        self.client.url(&format!("/session/{}{suffix}", self.id))
    }

    fn get_string(&self, suffix: &str) -> Result<String, WebDriverError> {
        let value = self.client.send(self.client.http.get(self.path(suffix)))?;
        value
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| WebDriverError::Malformed(format!("{suffix}: expected string")))
    }

    pub fn navigate(&self, url: &str) -> Result<(), WebDriverError> {
        self.client
            .send(self.client.http.post(self.path("/url")).json(&json!({ "url": url })))
            .map(drop)
    }

    pub fn current_url(&self) -> Result<String, WebDriverError> {
        self.get_string("/url")
    }

    pub fn page_source(&self) -> Result<String, WebDriverError> {
        self.get_string("/source")
    }

    /// PNG bytes of the viewport.
    pub fn screenshot(&self) -> Result<Vec<u8>, WebDriverError> {
        let encoded = self.get_string("/screenshot")?;
        base64::engine::general_purpose::STANDARD
            .decode(encoded.trim())
            .map_err(|e| WebDriverError::Malformed(format!("screenshot: {e}")))
    }

    pub fn delete(self) -> Result<(), WebDriverError> {
        self.client
            .send(self.client.http.delete(self.client.url(&format!("/session/{}", self.id))))
            .map(drop)
    }
}
