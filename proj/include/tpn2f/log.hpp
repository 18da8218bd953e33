#pragma once

namespace tpn2f {

/// Routes spdlog to stderr at the level named by TPN2F_LOG (debug, info or
/// warn; info when unset). An unrecognised value falls back to info with a
/// warning.
void init_logging();

}  // namespace tpn2f
