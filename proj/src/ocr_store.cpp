#include "harness/ocr_store.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "harness/errors.hpp"

namespace harness {
namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

constexpr double kPageClampTolerance = 2.0;

std::string trim(std::string_view s) {
    const auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
    std::size_t begin = 0;
    std::size_t end = s.size();
    while (begin < end && is_space(s[begin])) ++begin;
    while (end > begin && is_space(s[end - 1])) --end;
    return std::string(s.substr(begin, end - begin));
}

[[noreturn]] void token_error(std::size_t index, const std::string& what) {
    throw SchemaError("token " + std::to_string(index) + ": " + what);
}

Quad quad_from_json(const json& j, std::size_t index) {
    if (!j.is_array() || j.size() != 4) token_error(index, "quad must be an array of 4 points");
    Quad q;
    for (std::size_t i = 0; i < 4; ++i) {
        const json& p = j[i];
        if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
            token_error(index, "quad point " + std::to_string(i) + " must be [x, y]");
        }
        q.pts[i] = Point{p[0].get<double>(), p[1].get<double>()};
    }
    return q;
}

void clamp_to_page(Quad& q, double width, double height, std::size_t index) {
    for (Point& p : q.pts) {
        if (p.x < -kPageClampTolerance || p.x > width + kPageClampTolerance ||
            p.y < -kPageClampTolerance || p.y > height + kPageClampTolerance) {
            token_error(index, "quad lies outside the page beyond the 2 px tolerance");
        }
        p.x = std::clamp(p.x, 0.0, width);
        p.y = std::clamp(p.y, 0.0, height);
    }
}

OcrToken validate_token(std::string text, Quad quad, double confidence, std::size_t index,
                        const std::optional<std::pair<double, double>>& page_size) {
    for (const Point& p : quad.pts) {
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) token_error(index, "coordinate is not finite");
    }
    if (page_size) clamp_to_page(quad, page_size->first, page_size->second, index);
    for (const Point& p : quad.pts) {
        if (p.x < 0.0 || p.y < 0.0) token_error(index, "coordinate is negative");
    }
    quad = quad.normalized();
    if (!(quad.width() > 0.0) || !(quad.height() > 0.0)) {
        token_error(index, "degenerate quad (bounding box has no area)");
    }
    if (!std::isfinite(confidence) || confidence < 0.0 || confidence > 1.0) {
        token_error(index, "confidence out of [0, 1]");
    }
    std::string trimmed = trim(text);
    if (trimmed.empty()) token_error(index, "text is empty after trimming");
    return OcrToken{std::move(trimmed), quad, confidence};
}

OcrToken token_from_canonical(const json& j, std::size_t index,
                              const std::optional<std::pair<double, double>>& page_size) {
    if (!j.is_object()) token_error(index, "token must be an object");
    if (!j.contains("text") || !j["text"].is_string()) token_error(index, "missing string field 'text'");
    if (!j.contains("quad")) token_error(index, "missing field 'quad'");
    if (!j.contains("conf") || !j["conf"].is_number()) token_error(index, "missing numeric field 'conf'");
    return validate_token(j["text"].get<std::string>(), quad_from_json(j["quad"], index),
                          j["conf"].get<double>(), index, page_size);
}

OcrToken token_from_paddle(const json& j, std::size_t index) {
    if (!j.is_array() || j.size() != 2) token_error(index, "paddle record must be [quad, [text, conf]]");
    const json& rec = j[1];
    if (!rec.is_array() || rec.size() != 2 || !rec[0].is_string() || !rec[1].is_number()) {
        token_error(index, "paddle record payload must be [text, conf]");
    }
    return validate_token(rec[0].get<std::string>(), quad_from_json(j[0], index),
                          rec[1].get<double>(), index, std::nullopt);
}

std::optional<std::pair<double, double>> page_size_from_json(const json& j) {
    if (j.is_null()) return std::nullopt;
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
        throw SchemaError("page_size must be null or [width, height]");
    }
    double w = j[0].get<double>();
    double h = j[1].get<double>();
    if (!std::isfinite(w) || !std::isfinite(h) || w <= 0.0 || h <= 0.0) {
        throw SchemaError("page_size must be positive and finite");
    }
    return std::make_pair(w, h);
}

json parse_json(std::string_view raw) {
    json j = json::parse(raw, nullptr, false);
    if (j.is_discarded()) throw MalformedSyntaxError("input is not valid JSON");
    return j;
}

OcrDocument document_from_canonical(const json& j, const std::string& caller_image_id) {
    if (!j.is_object()) throw MalformedSyntaxError("canonical document must be a JSON object");
    std::string image_id = caller_image_id;
    if (j.contains("image_id")) {
        if (!j["image_id"].is_string()) throw SchemaError("image_id must be a string");
        std::string file_id = j["image_id"].get<std::string>();
        if (!caller_image_id.empty() && file_id != caller_image_id) {
            throw SchemaError("image_id mismatch: document has '" + file_id + "', expected '" +
                              caller_image_id + "'");
        }
        image_id = file_id;
    }
    if (image_id.empty()) throw SchemaError("image_id is empty");

    OcrDocument doc;
    doc.image_id = image_id;
    doc.source = SourceKind::external_file;
    if (j.contains("page_size")) doc.page_size = page_size_from_json(j["page_size"]);

    if (!j.contains("tokens") || !j["tokens"].is_array()) {
        throw SchemaError("missing array field 'tokens'");
    }
    const json& tokens = j["tokens"];
    doc.tokens.reserve(tokens.size());
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        doc.tokens.push_back(token_from_canonical(tokens[i], i, doc.page_size));
    }
    return doc;
}

OcrDocument document_from_paddle_list(const json& list, const std::string& image_id) {
    if (image_id.empty()) throw SchemaError("image_id is empty");
    OcrDocument doc;
    doc.image_id = image_id;
    doc.source = SourceKind::external_file;
    doc.tokens.reserve(list.size());
    for (std::size_t i = 0; i < list.size(); ++i) {
        doc.tokens.push_back(token_from_paddle(list[i], i));
    }
    return doc;
}

}  // namespace

double Quad::left() const {
    return std::min({pts[0].x, pts[1].x, pts[2].x, pts[3].x});
}

double Quad::right() const {
    return std::max({pts[0].x, pts[1].x, pts[2].x, pts[3].x});
}

double Quad::top() const {
    return std::min({pts[0].y, pts[1].y, pts[2].y, pts[3].y});
}

double Quad::bottom() const {
    return std::max({pts[0].y, pts[1].y, pts[2].y, pts[3].y});
}

Quad Quad::normalized() const {
    Point c{(pts[0].x + pts[1].x + pts[2].x + pts[3].x) / 4.0,
            (pts[0].y + pts[1].y + pts[2].y + pts[3].y) / 4.0};
    std::array<Point, 4> ordered = pts;
    // In image coordinates ascending atan2 angle walks TL -> TR -> BR -> BL.
    std::stable_sort(ordered.begin(), ordered.end(), [&](const Point& a, const Point& b) {
        return std::atan2(a.y - c.y, a.x - c.x) < std::atan2(b.y - c.y, b.x - c.x);
    });
    std::size_t start = 0;
    auto key = [](const Point& p) { return std::make_pair(p.x + p.y, p.y); };
    for (std::size_t i = 1; i < 4; ++i) {
        if (key(ordered[i]) < key(ordered[start])) start = i;
    }
    Quad out;
    for (std::size_t i = 0; i < 4; ++i) out.pts[i] = ordered[(start + i) % 4];
    return out;
}

std::string_view to_string(SourceKind kind) {
    return kind == SourceKind::external_file ? "external-file" : "groundtruth-override";
}

SourceKind source_kind_from_string(std::string_view s) {
    if (s == "external-file") return SourceKind::external_file;
    if (s == "groundtruth-override") return SourceKind::groundtruth_override;
    throw SchemaError("unknown source kind '" + std::string(s) + "'");
}

OcrFormat ocr_format_from_string(std::string_view s) {
    if (s == "canonical") return OcrFormat::canonical;
    if (s == "paddle") return OcrFormat::paddle;
    throw ConfigError("unknown OCR format '" + std::string(s) + "' (expected canonical or paddle)");
}

OcrDocument parse_ocr_document(std::string_view raw, const std::string& image_id, OcrFormat format) {
    json j = parse_json(raw);
    if (format == OcrFormat::canonical) {
        return document_from_canonical(j, image_id);
    }
    if (j.is_array()) {
        return document_from_paddle_list(j, image_id);
    }
    if (j.is_object()) {
        auto it = j.find(image_id);
        if (it == j.end()) throw SchemaError("image_id '" + image_id + "' not present in paddle map");
        if (!it->is_array()) throw SchemaError("paddle entry for '" + image_id + "' must be an array");
        return document_from_paddle_list(*it, image_id);
    }
    throw MalformedSyntaxError("paddle input must be a JSON array or map");
}

std::string serialize_canonical(const OcrDocument& doc) {
    ordered_json j;
    j["image_id"] = doc.image_id;
    if (doc.page_size) {
        j["page_size"] = {doc.page_size->first, doc.page_size->second};
    } else {
        j["page_size"] = nullptr;
    }
    ordered_json tokens = ordered_json::array();
    for (const OcrToken& t : doc.tokens) {
        ordered_json tok;
        tok["text"] = t.text;
        ordered_json quad = ordered_json::array();
        for (const Point& p : t.quad.pts) quad.push_back({p.x, p.y});
        tok["quad"] = std::move(quad);
        tok["conf"] = t.confidence;
        tokens.push_back(std::move(tok));
    }
    j["tokens"] = std::move(tokens);
    return j.dump();
}

OcrDocument apply_override(const OcrDocument& doc, const OcrCorrectionSet& corrections) {
    auto it = corrections.find(doc.image_id);
    if (it == corrections.end()) return doc;
    OcrDocument out = doc;
    out.tokens = it->second;
    out.source = SourceKind::groundtruth_override;
    return out;
}

OcrDocument filter_by_confidence(const OcrDocument& doc, double min_confidence) {
    if (min_confidence <= 0.0) return doc;
    OcrDocument out = doc;
    out.tokens.clear();
    for (const OcrToken& t : doc.tokens) {
        if (t.confidence >= min_confidence) out.tokens.push_back(t);
    }
    return out;
}

OcrCorpus load_corpus(const std::filesystem::path& path, OcrFormat format) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open OCR corpus: " + path.string());

    OcrCorpus corpus;
    if (format == OcrFormat::paddle) {
        std::ostringstream buf;
        buf << in.rdbuf();
        json j = parse_json(buf.str());
        if (!j.is_object()) throw MalformedSyntaxError("paddle corpus must be a JSON map");
        for (const auto& [key, value] : j.items()) {
            if (!value.is_array()) throw SchemaError("paddle entry for '" + key + "' must be an array");
            corpus.emplace(key, document_from_paddle_list(value, key));
        }
        return corpus;
    }

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        OcrDocument doc;
        try {
            doc = parse_ocr_document(line, "", OcrFormat::canonical);
        } catch (const Error& e) {
            throw SchemaError("line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!corpus.emplace(doc.image_id, std::move(doc)).second) {
            throw SchemaError("line " + std::to_string(line_no) + ": duplicate image_id");
        }
    }
    return corpus;
}

OcrCorrectionSet load_corrections(const std::filesystem::path& path) {
    OcrCorpus corpus = load_corpus(path, OcrFormat::canonical);
    OcrCorrectionSet out;
    for (auto& [id, doc] : corpus) out.emplace(id, std::move(doc.tokens));
    return out;
}

}  // namespace harness
