#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace harness {

struct Point {
    double x = 0.0;
    double y = 0.0;

    bool operator==(const Point&) const = default;
};

/// Four corners in clockwise order starting at the top-left (image
/// coordinates, y grows downward).
struct Quad {
    std::array<Point, 4> pts{};

    double left() const;
    double right() const;
    double top() const;
    double bottom() const;
    double width() const { return right() - left(); }
    double height() const { return bottom() - top(); }

    /// Reorders the vertices clockwise-from-top-left by angle around the
    /// centroid. Identity for quads already in canonical order.
    Quad normalized() const;

    bool operator==(const Quad&) const = default;
};

struct OcrToken {
    std::string text;
    Quad quad;
    double confidence = 1.0;

    bool operator==(const OcrToken&) const = default;
};

enum class SourceKind { external_file, groundtruth_override };

std::string_view to_string(SourceKind kind);
SourceKind source_kind_from_string(std::string_view s);

struct OcrDocument {
    std::string image_id;
    std::vector<OcrToken> tokens;
    SourceKind source = SourceKind::external_file;
    std::optional<std::pair<double, double>> page_size;  // (width px, height px)

    bool operator==(const OcrDocument&) const = default;
};

/// image_id -> replacement token list. Presence of a key means "replace".
using OcrCorrectionSet = std::map<std::string, std::vector<OcrToken>>;

using OcrCorpus = std::map<std::string, OcrDocument>;

enum class OcrFormat { canonical, paddle };

OcrFormat ocr_format_from_string(std::string_view s);

/// Parses one document from `raw`.
///
/// canonical: a single JSON object {"image_id", "page_size", "tokens"}. The
/// object's image_id wins when the caller passes an empty id; a non-empty
/// caller id must agree with the object's.
///
/// paddle: either a JSON array of [quad, [text, conf]] pairs for the given
/// image, or a JSON map image_id -> such arrays from which the matching
/// entry is taken.
///
/// Token order of the source is preserved. Quads are normalized to
/// clockwise-from-top-left; when page_size is present, coordinates up to
/// 2 px outside the page are clamped onto it and anything further out is a
/// schema violation. Errors name the offending token index.
OcrDocument parse_ocr_document(std::string_view raw, const std::string& image_id, OcrFormat format);

/// One canonical JSON line for `doc` ({"image_id", "page_size", "tokens"}).
std::string serialize_canonical(const OcrDocument& doc);

/// Replaces doc's tokens when the correction set has its image_id and marks
/// the result groundtruth-override; otherwise returns doc unchanged.
OcrDocument apply_override(const OcrDocument& doc, const OcrCorrectionSet& corrections);

/// Drops tokens with confidence strictly below `min_confidence`. Kept out
/// of parsing so the parser never silently loses tokens.
OcrDocument filter_by_confidence(const OcrDocument& doc, double min_confidence);

/// Loads a whole corpus file: canonical JSON-lines (one document per line)
/// or a paddle-style map over all images. Duplicate image ids are an error.
OcrCorpus load_corpus(const std::filesystem::path& path, OcrFormat format);

/// Correction sets use the canonical JSON-lines schema.
OcrCorrectionSet load_corrections(const std::filesystem::path& path);

}  // namespace harness
