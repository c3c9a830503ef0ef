// Copyright 2026 The adfp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <string_view>

namespace adfp::builtin {

// One row of the built-in attribute catalog, top-to-bottom in table order.
// `reason` is empty for collected attributes. `app` marks attributes that
// are also collected inside mobile-app WebViews.
struct CatalogRow {
  std::string_view meta_group;
  std::string_view name;
  std::string_view reason;
  std::string_view source;
  bool collected;
  bool app;
};

inline constexpr std::string_view kAdfV1Tag = "adf-v1";

// clang-format off
inline constexpr std::array kAdfV1 = std::to_array<CatalogRow>({
  {"UserAgent", "ua", "", "js-object", true, true},
  {"Time zone offset", "timeZoneOffset", "", "js-method", true, true},
  {"Bars settings", "menubar", "constant-value", "js-object", false, false},
  {"Bars settings", "personalbar", "constant-value", "js-object", false, false},
  {"Bars settings", "statusbar", "constant-value", "js-object", false, false},
  {"Bars settings", "toolbar", "constant-value", "js-object", false, false},
  {"Bars settings", "locationbar", "constant-value", "js-object", false, false},
  {"Bars settings", "scrollbars", "constant-value", "js-object", false, false},
  {"Network Info", "downlink", "unstable-over-time", "js-api", false, false},
  {"Network Info", "effectiveType", "unstable-over-time", "js-api", false, false},
  {"Network Info", "rtt", "unstable-over-time", "js-api", false, false},
  {"Network Info", "saveData", "unstable-over-time", "js-api", false, false},
  {"Network Info", "type", "unstable-over-time", "js-api", false, false},
  {"CPU cores", "hwConcurrency", "", "js-object", true, true},
  {"Device memory", "deviceMemory", "", "js-object", true, true},
  {"Screen settings", "width", "correlated-value", "js-object", false, false},
  {"Screen settings", "height", "correlated-value", "js-object", false, false},
  {"Screen: color depth", "colorDepth", "", "js-object", true, false},
  {"Screen settings", "pixelDepth", "correlated-value", "js-object", false, false},
  {"Screen: orientation angle", "orientation.angle", "", "js-object", true, true},
  {"Screen: orientation type", "orientation.type", "", "js-object", true, false},
  {"Screen: pixel left", "screenLeft", "", "js-object", true, false},
  {"Screen settings", "screenTop", "correlated-value", "js-object", false, false},
  {"Touch points", "multitouch", "subsumed", "js-object", false, false},
  {"Simultaneous touch points", "maxTouchPoints", "", "js-object", true, true},
  {"Content encoding", "content-encoding", "unstable-over-time", "http-header", false, false},
  {"Content type", "content-type", "unstable-over-time", "http-header", false, false},
  {"Referer", "referer", "unstable-over-time", "js-object", false, false},
  {"URL", "url", "unstable-over-time", "js-object", false, false},
  {"Platform", "platform", "subsumed", "js-object", false, false},
  {"Languages", "languages", "", "js-object", true, true},
  {"Do Not Track", "doNotTrack", "subsumed", "js-object", false, false},
  {"Java enabled", "javaEnabled", "constant-value", "js-object", false, false},
  {"Web Driver", "webDriver", "constant-value", "js-object", false, false},
  {"PDF viewer enabled", "pdfViewerEnabled", "", "js-object", true, false},
  {"available width", "availWidth", "", "js-object", true, true},
  {"available height", "availHeight", "", "js-object", true, true},
  {"available left", "availLeft", "", "js-object", true, false},
  {"available top", "availTop", "", "js-object", true, false},
  {"full screen enabled", "fullScreenEnabled", "", "js-object", true, true},
  {"Storage", "usage", "unstable-over-time", "ajax-api", false, false},
  {"Storage: quota", "quota", "", "ajax-api", true, true},
  {"navigator properties", "window.navigator", "", "js-object", true, true},
  {"Plugins", "plugins", "", "js-object", true, false},
  {"Cookie enabled", "cookieEnabled", "", "js-object", true, false},
  {"Cookies", "cookies", "unstable-over-time", "js-object", false, false},
  {"MIME type", "mimeType", "", "js-object", true, false},
  {"User Permissions state", "accelerometer", "", "ajax-method", true, false},
  {"User Permissions state", "ambient-light-sensor", "constant-value", "ajax-method", false, false},
  {"User Permissions state", "background-fetch", "", "ajax-method", true, false},
  {"User Permissions state", "background-sync", "", "ajax-method", true, false},
  {"User Permissions state", "camera", "", "ajax-method", true, false},
  {"User Permissions state", "clipboard-read", "", "ajax-method", true, false},
  {"User Permissions state", "clipboard-write", "", "ajax-method", true, false},
  {"User Permissions state", "display-capture", "", "ajax-method", true, false},
  {"User Permissions state", "geolocation", "", "ajax-method", true, false},
  {"User Permissions state", "gyroscope", "", "ajax-method", true, false},
  {"User Permissions state", "magnetometer", "", "ajax-method", true, false},
  {"User Permissions state", "microphone", "", "ajax-method", true, false},
  {"User Permissions state", "midi", "", "ajax-method", true, false},
  {"User Permissions state", "nfc", "", "ajax-method", true, false},
  {"User Permissions state", "notifications", "", "ajax-method", true, false},
  {"User Permissions state", "payment-handler", "", "ajax-method", true, false},
  {"User Permissions state", "persistent-storage", "", "ajax-method", true, false},
  {"User Permissions state", "push", "constant-value", "ajax-method", false, false},
  {"User Permissions state", "screen-wake-lock", "", "ajax-method", true, false},
  {"Media devices", "mediaDevices", "", "ajax-method", true, true},
  {"Canvas", "canvas", "", "js-api", true, true},
  {"Fonts", "fonts", "", "js-method", true, true},
  {"Bluetooth availability", "bluetoothAvailability", "", "ajax-api", true, false},
  {"Battery status: charging", "charging", "", "ajax-api", true, false},
  {"Battery status", "level", "unstable-over-time", "ajax-api", false, false},
  {"Battery status", "chargingTime", "unstable-over-time", "ajax-api", false, false},
  {"Battery status", "dischargingTime", "unstable-over-time", "ajax-api", false, false},
  {"Audio cxt: base latency", "baseLatency", "", "js-api", true, true},
  {"Audio cxt: max channel count", "maxChannelCount", "", "js-api", true, false},
  {"Audio cxt: sample rate", "sampleRate", "", "js-api", true, true},
  {"Audio cxt: state", "state", "", "js-api", true, false},
  {"Frequency analyser", "channelCount", "constant-value", "js-api", false, false},
  {"WebGL Vendor", "webglVendor", "subsumed", "js-api", false, false},
  {"WebGL (Rend - Param)", "webglRenderer", "", "js-api", true, true},
  {"WebGL Extensions", "webglExtensions", "", "js-api", true, true},
  {"WebGL Attributes", "antialias", "constant-value", "js-api", false, false},
  {"WebGL (Rend - Param)", "powerPreference", "", "js-api", true, true},
  {"WebGL Attributes", "desynchronized", "constant-value", "js-api", false, false},
  {"WebGL (Rend - Param)", "ALIASED_LINE_WIDTH_RANGE", "", "js-api", true, true},
  {"WebGL (Rend - Param)", "ALIASED_POINT_SIZE_RANGE", "", "js-api", true, true},
  {"WebGL Parameters", "IMPLEMENTATION_COLOR_READ_FORMAT", "constant-value", "js-api", false, false},
  {"WebGL Parameters", "IMPLEMENTATION_COLOR_READ_TYPE", "constant-value", "js-api", false, false},
  {"WebGL (Rend - Param)", "MAX_COMBINED_TEXTURE_IMAGE_UNITS", "", "js-api", true, true},
  {"WebGL (Rend - Param)", "MAX_CUBE_MAP_TEXTURE_SIZE", "", "js-api", true, true},
  {"WebGL (Rend - Param)", "MAX_FRAGMENT_UNIFORM_VECTORS", "", "js-api", true, true},
  {"WebGL (Rend - Param)", "MAX_RENDERBUFFER_SIZE", "", "js-api", true, true},
  {"WebGL Parameters", "MAX_TEXTURE_IMAGE_UNITS", "constant-value", "js-api", false, false},
  {"WebGL Parameters", "MAX_TEXTURE_SIZE", "correlated-value", "js-api", false, false},
  {"WebGL (Rend - Param)", "MAX_VARYING_VECTORS", "", "js-api", true, true},
  {"WebGL (Rend - Param)", "MAX_VERTEX_ATTRIBS", "", "js-api", true, true},
  {"WebGL Parameters", "MAX_VERTEX_TEXTURE_IMAGE_UNITS", "constant-value", "js-api", false, false},
  {"WebGL (Rend - Param)", "MAX_VERTEX_UNIFORM_VECTORS", "", "js-api", true, true},
  {"WebGL (Rend - Param)", "MAX_VIEWPORT_DIMS", "", "js-api", true, true},
  {"WebGL Parameters", "RENDERER", "subsumed", "js-api", false, false},
  {"WebGL (Rend - Param)", "SAMPLES", "", "js-api", true, true},
  {"WebGL Parameters", "SAMPLE_BUFFERS", "constant-value", "js-api", false, false},
  {"WebGL Parameters", "SHADING_LANGUAGE_VERSION", "subsumed", "js-api", false, false},
  {"WebGL Parameters", "STENCIL_FUNC", "constant-value", "js-api", false, false},
  {"WebGL (Rend - Param)", "STENCIL_VALUE_MASK", "", "js-api", true, true},
  {"WebGL (Rend - Param)", "SUBPIXEL_BITS", "", "js-api", true, true},
  {"WebGL Parameters", "VENDOR", "subsumed", "js-api", false, false},
  {"WebGL Parameters", "VERSION", "subsumed", "js-api", false, false},
  {"WebGL ShaderPrecision", "FR_S_LOW_FLOAT", "correlated-value", "js-api", false, false},
  {"WebGL ShaderPrecision", "FR_S_MEDIUM_FLOAT", "correlated-value", "js-api", false, false},
  {"WebGL ShaderPrecision", "FR_S_HIGH_FLOAT", "constant-value", "js-api", false, false},
  {"WebGL ShaderPrecision", "FR_S_LOW_INT", "correlated-value", "js-api", false, false},
  {"WebGL ShaderPrecision", "FR_S_MEDIUM_INT", "correlated-value", "js-api", false, false},
  {"WebGL (Rend - Param)", "FR_S_HIGH_INT.rangeMax", "", "js-api", true, true},
  {"WebGL ShaderPrecision", "VR_SLOW_FLOAT", "correlated-value", "js-api", false, false},
  {"WebGL ShaderPrecision", "VR_SMEDIUM_FLOAT", "correlated-value", "js-api", false, false},
  {"WebGL ShaderPrecision", "VR_SLOW_INT", "correlated-value", "js-api", false, false},
  {"WebGL ShaderPrecision", "VR_SMEDIUM_INT", "correlated-value", "js-api", false, false},
  {"WebGL ShaderPrecision", "VR_SHIGH_INT", "correlated-value", "js-api", false, false},
  {"Audio formats: ACC", "acc.supported", "", "ajax-api", true, true},
  {"Audio formats", "x-wav", "correlated-value", "ajax-api", false, false},
  {"Audio formats", "mpeg", "correlated-value", "ajax-api", false, false},
  {"Audio formats: AACP", "aacp.supported", "", "ajax-api", true, false},
  {"Audio formats", "wav", "correlated-value", "ajax-api", false, false},
  {"Audio formats", "mp4-codec_mp4a402", "constant-value", "ajax-api", false, false},
  {"Audio formats", "mp4-codec_ac-3", "correlated-value", "ajax-api", false, false},
  {"Audio formats", "mp4-codec_ec-3", "correlated-value", "ajax-api", false, false},
  {"Audio formats", "mp4-codec_alac", "constant-value", "ajax-api", false, false},
  {"Audio formats", "flac", "correlated-value", "ajax-api", false, false},
  {"Audio formats", "mp4-codec_flac", "correlated-value", "ajax-api", false, false},
  {"Audio formats", "ogg-codec_flac", "correlated-value", "ajax-api", false, false},
  {"Audio formats", "mp4-codec_mp3", "correlated-value", "ajax-api", false, false},
  {"Audio formats", "ogg-codec_opus", "correlated-value", "ajax-api", false, false},
  {"Audio formats", "webm-codec_opus", "correlated-value", "ajax-api", false, false},
  {"Audio formats", "mp4-codec_opus", "correlated-value", "ajax-api", false, false},
  {"Audio formats", "ogg-codec_vorbis", "correlated-value", "ajax-api", false, false},
  {"Audio formats", "webm-codec_vorbis", "correlated-value", "ajax-api", false, false},
});
// clang-format on

}  // namespace adfp::builtin
