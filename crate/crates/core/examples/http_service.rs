//! Drive the HTTP interface in-process. `symdist serve --bundle data/bundle`
//! exposes the same router on a socket.
//!
//! ```bash
//! cargo run --example http_service
//! ```

use std::path::Path;
use std::sync::Arc;

use axum::body::Body;
use axum::http::Request;
use http_body_util::BodyExt;
use symdist::service::{self, AppState, ServiceConfig};
use tower::ServiceExt;

async fn send(app: &axum::Router, method: &str, uri: &str, body: &str) -> String {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(Body::from(body.to_string()))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    format!("{method} {uri} -> {status}\n{}", String::from_utf8_lossy(&bytes))
}

#[tokio::main]
async fn main() -> symdist::Result<()> {
    let bundle = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/bundle");
    let app = service::router(Arc::new(AppState::load(ServiceConfig::new(bundle))?));

    println!("{}", send(&app, "GET", "/v1/health", "").await);
    println!("{}", send(&app, "POST", "/v1/encode", r#"{"values":[100,"002",3,4]}"#).await);
    println!("{}", send(&app, "POST", "/v1/distance", r#"{"a":"12300234","b":"12400234"}"#).await);
    println!("{}", send(&app, "POST", "/v1/diagnose", r#"{"case_id":"web","symptoms":["60040302","62040414"],"k":2}"#).await);
    println!("{}", send(&app, "POST", "/v1/diagnose", r#"{"symptoms":[]}"#).await);
    Ok(())
}
