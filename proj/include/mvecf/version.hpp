#pragma once

namespace mvecf {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kModelFormatVersion = 1;
inline constexpr int kReportSchemaVersion = 1;

}  // namespace mvecf
