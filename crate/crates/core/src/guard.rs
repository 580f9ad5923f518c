//! Target interlock for every outbound connection the attacker-side tools
//! make. Loopback and RFC 1918 addresses are always fair game; anything
//! else needs the caller to assert ownership explicitly.

use std::net::IpAddr;

use crate::error::{Error, Result};

/// True for addresses the laboratory treats as self-owned by construction.
pub fn is_private(ip: IpAddr) -> bool {
    match ip {
        IpAddr::V4(v4) => v4.is_loopback() || v4.is_private(),
        IpAddr::V6(v6) => v6.is_loopback(),
    }
}

/// Refuses a non-private target unless `acknowledged` carries the caller's
/// explicit ownership claim.
pub fn ensure_allowed(ip: IpAddr, acknowledged: bool) -> Result<()> {
    if acknowledged || is_private(ip) {
        Ok(())
    } else {
        Err(Error::TargetNotAllowed(ip))
    }
}
