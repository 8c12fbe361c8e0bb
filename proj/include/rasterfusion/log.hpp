#pragma once

namespace rasterfusion {

/// Points spdlog's default logger at stderr and sets its level from
/// RASTERFUSION_LOG (quiet | info | debug; default info). Unknown values fall
/// back to info.
void configure_logging();

}  // namespace rasterfusion
