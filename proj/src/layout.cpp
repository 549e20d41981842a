#include "harness/layout.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "harness/errors.hpp"

namespace harness {
namespace {

double vertical_overlap(const Quad& a, const Quad& b) {
    return std::min(a.bottom(), b.bottom()) - std::max(a.top(), b.top());
}

bool same_line(const OcrToken& a, const OcrToken& b, double threshold) {
    double min_height = std::min(a.quad.height(), b.quad.height());
    return vertical_overlap(a.quad, b.quad) >= threshold * min_height;
}

struct UnionFind {
    std::vector<std::size_t> parent;

    explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }

    std::size_t find(std::size_t i) {
        while (parent[i] != i) {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        return i;
    }

    void unite(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
};

double median(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    std::size_t n = values.size();
    if (n == 0) return 0.0;
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

struct GapInterval {
    double begin = 0.0;  // right edge of the token before the gap
    double end = 0.0;    // left edge of the token after the gap
};

/// Wide gaps split a line into column segments.
struct LineColumns {
    std::vector<GapInterval> gaps;               // the wide gaps, left to right
    std::vector<std::vector<std::size_t>> segments;  // token indices per segment
};

/// Threshold separating in-cell spacing from column gaps. The document
/// median gap alone fails on grids whose every gap is a column gap, so the
/// median token width acts as the lower reference.
double reference_gap(const std::vector<Line>& lines) {
    std::vector<double> gaps;
    std::vector<double> widths;
    for (const Line& line : lines) {
        for (std::size_t i = 0; i < line.tokens.size(); ++i) {
            widths.push_back(line.tokens[i].quad.width());
            if (i + 1 < line.tokens.size()) {
                double g = line.tokens[i + 1].quad.left() - line.tokens[i].quad.right();
                gaps.push_back(std::max(0.0, g));
            }
        }
    }
    if (widths.empty()) return 0.0;
    if (gaps.empty()) return median(std::move(widths));
    return std::min(median(std::move(gaps)), median(std::move(widths)));
}

LineColumns split_columns(const Line& line, double wide_threshold) {
    LineColumns cols;
    cols.segments.push_back({0});
    for (std::size_t i = 1; i < line.tokens.size(); ++i) {
        double prev_right = line.tokens[i - 1].quad.right();
        double cur_left = line.tokens[i].quad.left();
        if (cur_left - prev_right > wide_threshold) {
            cols.gaps.push_back({prev_right, cur_left});
            cols.segments.push_back({});
        }
        cols.segments.back().push_back(i);
    }
    return cols;
}

bool intersect(GapInterval& acc, const GapInterval& other) {
    double begin = std::max(acc.begin, other.begin);
    double end = std::min(acc.end, other.end);
    if (begin >= end) return false;
    acc = {begin, end};
    return true;
}

TableModel build_model(const std::vector<Line>& lines, std::size_t first, std::size_t count,
                       const std::vector<GapInterval>& separators) {
    TableModel model;
    model.rows.assign(lines.begin() + first, lines.begin() + first + count);

    double min_left = model.rows[0].tokens[0].quad.left();
    double max_right = 0.0;
    for (const Line& row : model.rows) {
        for (const OcrToken& t : row.tokens) {
            min_left = std::min(min_left, t.quad.left());
            max_right = std::max(max_right, t.quad.right());
        }
    }
    model.column_bounds.push_back(min_left);
    for (const GapInterval& g : separators) {
        model.column_bounds.push_back(0.5 * (g.begin + g.end));
    }
    model.column_bounds.push_back(max_right);

    std::size_t cols = model.column_count();
    for (const Line& row : model.rows) {
        std::vector<std::string> cells(cols);
        for (const OcrToken& t : row.tokens) {
            double cx = 0.5 * (t.quad.left() + t.quad.right());
            std::size_t c = cols - 1;
            for (std::size_t j = 0; j + 1 < model.column_bounds.size(); ++j) {
                if (cx < model.column_bounds[j + 1]) {
                    c = j;
                    break;
                }
            }
            if (!cells[c].empty()) cells[c] += ' ';
            cells[c] += t.text;
        }
        model.cells.push_back(std::move(cells));
    }
    return model;
}

std::string pipe_row(const std::vector<std::string>& cells) {
    std::string out = "|";
    for (const std::string& cell : cells) {
        out += ' ';
        out += cell;
        out += " |";
    }
    return out;
}

}  // namespace

SerializerMode serializer_mode_from_string(std::string_view s) {
    if (s == "markdown") return SerializerMode::markdown;
    if (s == "plain") return SerializerMode::plain;
    throw ConfigError("unknown serializer mode '" + std::string(s) + "' (expected markdown or plain)");
}

void SerializerOptions::validate() const {
    if (!(line_overlap_threshold > 0.0) || line_overlap_threshold > 1.0) {
        throw ConfigError("line_overlap_threshold must be in (0, 1]");
    }
    if (!(column_gap_factor > 0.0)) throw ConfigError("column_gap_factor must be > 0");
    if (table_min_rows < 2) throw ConfigError("table_min_rows must be >= 2");
    if (table_min_cols < 2) throw ConfigError("table_min_cols must be >= 2");
}

std::vector<Line> group_lines(std::span<const OcrToken> tokens, double threshold) {
    if (!(threshold > 0.0) || threshold > 1.0) {
        throw ConfigError("line grouping threshold must be in (0, 1]");
    }
    std::size_t n = tokens.size();
    UnionFind uf(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (same_line(tokens[i], tokens[j], threshold)) uf.unite(i, j);
        }
    }

    std::vector<std::vector<std::size_t>> groups(n);
    for (std::size_t i = 0; i < n; ++i) groups[uf.find(i)].push_back(i);

    std::vector<Line> lines;
    for (auto& members : groups) {
        if (members.empty()) continue;
        std::sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
            double la = tokens[a].quad.left();
            double lb = tokens[b].quad.left();
            if (la != lb) return la < lb;
            double ta = tokens[a].quad.top();
            double tb = tokens[b].quad.top();
            if (ta != tb) return ta < tb;
            return a < b;
        });
        Line line;
        line.band_top = tokens[members[0]].quad.top();
        line.band_bottom = tokens[members[0]].quad.bottom();
        for (std::size_t idx : members) {
            line.band_top = std::min(line.band_top, tokens[idx].quad.top());
            line.band_bottom = std::max(line.band_bottom, tokens[idx].quad.bottom());
            line.tokens.push_back(tokens[idx]);
        }
        lines.push_back(std::move(line));
    }
    std::sort(lines.begin(), lines.end(), [](const Line& a, const Line& b) {
        if (a.band_top != b.band_top) return a.band_top < b.band_top;
        if (a.band_bottom != b.band_bottom) return a.band_bottom < b.band_bottom;
        return a.tokens[0].quad.left() < b.tokens[0].quad.left();
    });
    return lines;
}

std::string line_text(const Line& line) {
    std::string out;
    for (std::size_t i = 0; i < line.tokens.size(); ++i) {
        if (i) out += ' ';
        out += line.tokens[i].text;
    }
    return out;
}

std::vector<TableSpan> find_tables(const std::vector<Line>& lines, const SerializerOptions& opts) {
    opts.validate();
    std::vector<TableSpan> tables;
    double ref = reference_gap(lines);
    if (ref <= 0.0) return tables;
    double wide = opts.column_gap_factor * ref;

    std::vector<LineColumns> cols;
    cols.reserve(lines.size());
    for (const Line& line : lines) cols.push_back(split_columns(line, wide));

    std::size_t i = 0;
    while (i < lines.size()) {
        std::size_t gap_count = cols[i].gaps.size();
        if (gap_count + 1 < static_cast<std::size_t>(opts.table_min_cols)) {
            ++i;
            continue;
        }
        std::vector<GapInterval> separators = cols[i].gaps;
        std::size_t end = i + 1;
        while (end < lines.size() && cols[end].gaps.size() == gap_count) {
            std::vector<GapInterval> merged = separators;
            bool ok = true;
            for (std::size_t g = 0; g < gap_count; ++g) {
                if (!intersect(merged[g], cols[end].gaps[g])) {
                    ok = false;
                    break;
                }
            }
            if (!ok) break;
            separators = std::move(merged);
            ++end;
        }
        std::size_t run = end - i;
        if (run >= static_cast<std::size_t>(opts.table_min_rows)) {
            tables.push_back({i, run, build_model(lines, i, run, separators)});
            i = end;
        } else {
            ++i;
        }
    }
    return tables;
}

std::optional<TableModel> detect_table(const std::vector<Line>& lines, const SerializerOptions& opts) {
    std::vector<TableSpan> tables = find_tables(lines, opts);
    if (tables.empty()) return std::nullopt;
    return std::move(tables.front().model);
}

std::string serialize(const OcrDocument& doc, const SerializerOptions& opts) {
    opts.validate();
    std::vector<Line> lines = group_lines(doc.tokens, opts.line_overlap_threshold);

    std::vector<std::string> out_lines;
    if (opts.mode == SerializerMode::plain) {
        out_lines.reserve(lines.size());
        for (const Line& line : lines) out_lines.push_back(line_text(line));
    } else {
        std::vector<TableSpan> tables = find_tables(lines, opts);
        std::size_t next_table = 0;
        std::size_t i = 0;
        while (i < lines.size()) {
            if (next_table < tables.size() && tables[next_table].first_line == i) {
                const TableModel& model = tables[next_table].model;
                out_lines.push_back(pipe_row(model.cells[0]));
                out_lines.push_back(pipe_row(std::vector<std::string>(model.column_count(), "---")));
                for (std::size_t r = 1; r < model.cells.size(); ++r) {
                    out_lines.push_back(pipe_row(model.cells[r]));
                }
                i += tables[next_table].line_count;
                ++next_table;
            } else {
                out_lines.push_back(line_text(lines[i]));
                ++i;
            }
        }
    }

    std::string out;
    for (std::size_t i = 0; i < out_lines.size(); ++i) {
        if (i) out += '\n';
        out += out_lines[i];
    }
    return out;
}

}  // namespace harness
