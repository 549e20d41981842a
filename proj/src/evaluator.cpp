#include "harness/evaluator.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cstdio>
#include <istream>
#include <ostream>

#include "harness/errors.hpp"

namespace harness {
namespace {

/// Decodes the UTF-8 sequence starting at `i`, advancing `i` past it. Invalid
/// bytes decode as U+FFFD one byte at a time so normalization never throws.
char32_t decode_utf8(std::string_view s, std::size_t& i) {
    unsigned char lead = static_cast<unsigned char>(s[i]);
    std::size_t len = 0;
    char32_t cp = 0;
    if (lead < 0x80) {
        ++i;
        return lead;
    } else if ((lead & 0xE0) == 0xC0) {
        len = 2;
        cp = lead & 0x1F;
    } else if ((lead & 0xF0) == 0xE0) {
        len = 3;
        cp = lead & 0x0F;
    } else if ((lead & 0xF8) == 0xF0) {
        len = 4;
        cp = lead & 0x07;
    } else {
        ++i;
        return 0xFFFD;
    }
    if (i + len > s.size()) {
        ++i;
        return 0xFFFD;
    }
    for (std::size_t k = 1; k < len; ++k) {
        unsigned char cont = static_cast<unsigned char>(s[i + k]);
        if ((cont & 0xC0) != 0x80) {
            ++i;
            return 0xFFFD;
        }
        cp = (cp << 6) | (cont & 0x3F);
    }
    i += len;
    return cp;
}

void append_utf8(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

bool is_space_cp(char32_t cp) {
    switch (cp) {
        case U' ':
        case U'\t':
        case U'\n':
        case U'\r':
        case U'\f':
        case U'\v':
        case 0x00A0:  // no-break space
        case 0x2007:  // figure space
        case 0x202F:  // narrow no-break space
        case 0x3000:  // ideographic space
        case 0xFEFF:  // zero width no-break space
            return true;
        default:
            return cp >= 0x2000 && cp <= 0x200B;  // en quad .. zero width space
    }
}

/// Folds one code point to its ASCII-ish canonical form; returns the
/// replacement string, or empty to keep the (lowercased) code point as is.
std::string_view fold(char32_t cp) {
    switch (cp) {
        case 0x2018:
        case 0x2019:
        case 0x201A:
        case 0x2032: return "'";
        case 0x201C:
        case 0x201D:
        case 0x201E:
        case 0x2033: return "\"";
        case 0x2010:
        case 0x2011:
        case 0x2012:
        case 0x2013:
        case 0x2014:
        case 0x2015:
        case 0x2212: return "-";
        case 0x2026: return "...";
        case 0xFB00: return "ff";
        case 0xFB01: return "fi";
        case 0xFB02: return "fl";
        case 0xFB03: return "ffi";
        case 0xFB04: return "ffl";
        default: return {};
    }
}

char32_t lower(char32_t cp) {
    if (cp >= U'A' && cp <= U'Z') return cp + 32;
    // Latin-1 uppercase letters, excluding the multiplication sign.
    if (cp >= 0x00C0 && cp <= 0x00DE && cp != 0x00D7) return cp + 32;
    return cp;
}

bool is_strip_punct(char32_t cp) {
    switch (cp) {
        case U'.':
        case U',':
        case U'!':
        case U'?':
        case U';':
        case U':':
        case U'\'':
        case U'"':
        case U'(':
        case U')':
        case U'[':
        case U']':
            return true;
        default:
            return false;
    }
}

/// Strips the punctuation set greedily from both edges of an ASCII-space
/// separated word. A word made entirely of punctuation disappears.
void append_stripped_word(std::string& out, std::string_view word) {
    std::size_t begin = 0;
    std::size_t end = word.size();
    while (begin < end && is_strip_punct(static_cast<unsigned char>(word[begin]))) ++begin;
    while (end > begin && is_strip_punct(static_cast<unsigned char>(word[end - 1]))) --end;
    if (begin == end) return;
    if (!out.empty()) out.push_back(' ');
    out.append(word.substr(begin, end - begin));
}

bool is_word_char(char c) {
    unsigned char u = static_cast<unsigned char>(c);
    return u != ' ';
}

}  // namespace

std::string normalize(std::string_view text) {
    // Pass 1: fold, lowercase, collapse whitespace.
    std::string folded;
    folded.reserve(text.size());
    bool pending_space = false;
    std::size_t i = 0;
    while (i < text.size()) {
        char32_t cp = decode_utf8(text, i);
        // Fullwidth ASCII variants map onto the basic Latin block.
        if (cp >= 0xFF01 && cp <= 0xFF5E) cp = cp - 0xFF01 + U'!';
        if (is_space_cp(cp)) {
            pending_space = !folded.empty();
            continue;
        }
        if (pending_space) {
            folded.push_back(' ');
            pending_space = false;
        }
        std::string_view repl = fold(cp);
        if (!repl.empty()) {
            folded.append(repl);
        } else {
            append_utf8(folded, lower(cp));
        }
    }
    // Pass 2: strip punctuation from word edges. Stripping can only expose
    // more punctuation, so the greedy scan already reaches the fixpoint.
    std::string out;
    out.reserve(folded.size());
    std::size_t start = 0;
    while (start < folded.size()) {
        std::size_t space = folded.find(' ', start);
        if (space == std::string::npos) space = folded.size();
        append_stripped_word(out, std::string_view(folded).substr(start, space - start));
        start = space + 1;
    }
    return out;
}

bool is_correct(std::string_view prediction, const std::vector<std::string>& answers,
                MatchMode mode) {
    std::string pred = normalize(prediction);
    for (const std::string& answer : answers) {
        std::string ref = normalize(answer);
        if (ref.empty()) continue;
        std::size_t pos = pred.find(ref);
        while (pos != std::string::npos) {
            if (mode == MatchMode::substring) return true;
            bool left_ok = pos == 0 || !is_word_char(pred[pos - 1]);
            std::size_t end = pos + ref.size();
            bool right_ok = end == pred.size() || !is_word_char(pred[end]);
            if (left_ok && right_ok) return true;
            pos = pred.find(ref, pos + 1);
        }
    }
    return false;
}

std::map<MetricKey, Metrics> aggregate(const std::vector<EvalRecord>& records) {
    std::map<MetricKey, Metrics> out;
    for (const EvalRecord& r : records) {
        Metrics& m = out[MetricKey{r.dataset, r.model_id, r.ocr_source}];
        ++m.total;
        if (r.correct) ++m.correct;
    }
    return out;
}

std::string format_accuracy(double accuracy) {
    std::array<char, 32> buf{};
    std::snprintf(buf.data(), buf.size(), "%.4f", accuracy);
    return std::string(buf.data());
}

std::string record_to_json_line(const EvalRecord& record, bool include_latency) {
    nlohmann::ordered_json j;
    j["sample_id"] = record.sample_id;
    j["dataset"] = record.dataset;
    j["model_id"] = record.model_id;
    j["ocr_source"] = record.ocr_source;
    j["ocr_source_kind"] = std::string(to_string(record.ocr_source_kind));
    j["prediction"] = record.prediction;
    j["correct"] = record.correct;
    j["prompt_hash"] = record.prompt_hash;
    if (include_latency) j["latency_ms"] = record.latency_ms;
    return j.dump();
}

EvalRecord record_from_json_line(const std::string& line) {
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw MalformedSyntaxError("record line is not a JSON object");
    }
    EvalRecord r;
    try {
        r.sample_id = j.at("sample_id").get<std::string>();
        r.dataset = j.at("dataset").get<std::string>();
        r.model_id = j.at("model_id").get<std::string>();
        r.ocr_source = j.at("ocr_source").get<std::string>();
        r.ocr_source_kind = source_kind_from_string(j.at("ocr_source_kind").get<std::string>());
        r.prediction = j.at("prediction").get<std::string>();
        r.correct = j.at("correct").get<bool>();
        r.prompt_hash = j.at("prompt_hash").get<std::string>();
        if (j.contains("latency_ms")) r.latency_ms = j["latency_ms"].get<std::int64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("record line: ") + e.what());
    }
    return r;
}

void write_records(std::ostream& out, const std::vector<EvalRecord>& records,
                   bool include_latency) {
    for (const EvalRecord& r : records) {
        out << record_to_json_line(r, include_latency) << '\n';
    }
}

std::vector<EvalRecord> read_records(std::istream& in) {
    std::vector<EvalRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            records.push_back(record_from_json_line(line));
        } catch (const Error& e) {
            throw SchemaError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return records;
}

}  // namespace harness
