//! Multipart HTTP clients.
//!
//! `POST {base}/prompt` with parts `image` (PNG) and `task` answers
//! `{"prompt": "..."}`. `POST {base}/segment` with parts `image` and `prompt`
//! answers a 0/255 grayscale PNG. Errors come back as non-2xx with a JSON
//! body `{"code": ..., "message": ...}`.

use std::time::Duration;

use reqwest::blocking::{multipart, Client, Response};
use serde::Deserialize;

use super::{MaskBackend, PromptBackend, TaskContext, DEFAULT_BACKEND_TIMEOUT};
use crate::error::{Error, Result};
use crate::fusion::MaskSource;
use crate::raster::{BinaryMask, RgbImage};

#[derive(Deserialize)]
struct PromptReply {
    prompt: String,
}

#[derive(Deserialize)]
struct ErrorReply {
    code: serde_json::Value,
    message: String,
}

fn client(timeout: Duration, name: &str) -> Result<Client> {
    Client::builder().timeout(timeout).build().map_err(|e| Error::Backend {
        backend: name.to_string(),
        status: None,
        message: format!("cannot build http client: {e}"),
    })
}

fn image_part(rgb: &RgbImage) -> Result<multipart::Part> {
    let png = rgb.encode_png()?;
    multipart::Part::bytes(png)
        .file_name("frame.png")
        .mime_str("image/png")
        .map_err(|e| Error::Format(e.to_string()))
}

fn send(name: &str, req: reqwest::blocking::RequestBuilder) -> Result<Response> {
    let resp = req.send().map_err(|e| Error::Backend {
        backend: name.to_string(),
        status: None,
        message: e.to_string(),
    })?;
    let status = resp.status();
    if status.is_success() {
        return Ok(resp);
    }
    let body = resp.text().unwrap_or_default();
    let message = match serde_json::from_str::<ErrorReply>(&body) {
        Ok(e) => format!("{} ({})", e.message, e.code),
        Err(_) => body,
    };
    Err(Error::Backend {
        backend: name.to_string(),
        status: Some(status.as_u16()),
        message,
    })
}

fn join(base: &str, path: &str) -> String {
    format!("{}/{}", base.trim_end_matches('/'), path)
}

#[derive(Debug, Clone)]
pub struct HttpPromptBackend {
    base: String,
    client: Client,
}

impl HttpPromptBackend {
    pub fn new(base_url: impl Into<String>) -> Result<Self> {
        Self::with_timeout(base_url, DEFAULT_BACKEND_TIMEOUT)
    }

    pub fn with_timeout(base_url: impl Into<String>, timeout: Duration) -> Result<Self> {
        let base = base_url.into();
        let client = client(timeout, &base)?;
        Ok(HttpPromptBackend { base, client })
    }
}

impl PromptBackend for HttpPromptBackend {
    fn name(&self) -> String {
        join(&self.base, "prompt")
    }

    fn generate(&self, task: &TaskContext, rgb: &RgbImage) -> Result<String> {
        let name = self.name();
        let form = multipart::Form::new()
            .part("image", image_part(rgb)?)
            .text("task", task.task_text.clone());
        let resp = send(&name, self.client.post(&name).multipart(form))?;
        let text = resp.text().map_err(|e| Error::Backend {
            backend: name.clone(),
            status: None,
            message: e.to_string(),
        })?;
        let reply: PromptReply = serde_json::from_str(&text).map_err(|e| Error::Protocol {
            backend: name.clone(),
            message: format!("bad prompt reply: {e}"),
        })?;
        Ok(reply.prompt)
    }
}

#[derive(Debug, Clone)]
pub struct HttpMaskBackend {
    base: String,
    client: Client,
}

impl HttpMaskBackend {
    pub fn new(base_url: impl Into<String>) -> Result<Self> {
        Self::with_timeout(base_url, DEFAULT_BACKEND_TIMEOUT)
    }

    pub fn with_timeout(base_url: impl Into<String>, timeout: Duration) -> Result<Self> {
        let base = base_url.into();
        let client = client(timeout, &base)?;
        Ok(HttpMaskBackend { base, client })
    }
}

impl MaskBackend for HttpMaskBackend {
    fn name(&self) -> String {
        join(&self.base, "segment")
    }

    fn source(&self) -> MaskSource {
        MaskSource::Service
    }

    fn segment(&self, prompt: &str, rgb: &RgbImage, _frame_idx: u64) -> Result<BinaryMask> {
        let name = self.name();
        let form = multipart::Form::new()
            .part("image", image_part(rgb)?)
            .text("prompt", prompt.to_string());
        let resp = send(&name, self.client.post(&name).multipart(form))?;
        let bytes = resp.bytes().map_err(|e| Error::Backend {
            backend: name.clone(),
            status: None,
            message: e.to_string(),
        })?;
        BinaryMask::decode_png(&bytes).map_err(|e| Error::Protocol {
            backend: name,
            message: format!("bad mask reply: {e}"),
        })
    }
}
