#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "harness/ocr_store.hpp"

namespace harness {

/// One reconstructed text line: tokens left-to-right plus the vertical band
/// covering all member boxes.
struct Line {
    std::vector<OcrToken> tokens;
    double band_top = 0.0;
    double band_bottom = 0.0;
};

/// A detected grid of lines sharing a column partition. column_bounds has
/// column-count + 1 strictly increasing x values; cells[r][c] is the joined
/// token text of that cell ("" when vacant).
struct TableModel {
    std::vector<Line> rows;
    std::vector<double> column_bounds;
    std::vector<std::vector<std::string>> cells;

    std::size_t column_count() const { return column_bounds.empty() ? 0 : column_bounds.size() - 1; }
};

/// A table block located within a line list.
struct TableSpan {
    std::size_t first_line = 0;
    std::size_t line_count = 0;
    TableModel model;
};

enum class SerializerMode { markdown, plain };

SerializerMode serializer_mode_from_string(std::string_view s);

struct SerializerOptions {
    SerializerMode mode = SerializerMode::plain;
    double line_overlap_threshold = 0.5;
    double column_gap_factor = 1.5;
    int table_min_rows = 2;
    int table_min_cols = 2;

    void validate() const;
};

/// Partitions tokens into lines: two tokens share a line iff their vertical
/// overlap is >= threshold * min(box heights), closed transitively. Lines
/// come back top-to-bottom; tokens within a line are sorted by left edge,
/// ties by top edge, then input order.
std::vector<Line> group_lines(std::span<const OcrToken> tokens, double threshold);

/// Member tokens joined with single spaces.
std::string line_text(const Line& line);

/// All maximal blocks of >= table_min_rows consecutive lines whose wide-gap
/// column partitions agree (the gap intervals of corresponding columns
/// intersect across every row of the block). A gap is wide when it exceeds
/// column_gap_factor times the document's reference gap.
std::vector<TableSpan> find_tables(const std::vector<Line>& lines, const SerializerOptions& opts);

/// The topmost table block, if any.
std::optional<TableModel> detect_table(const std::vector<Line>& lines, const SerializerOptions& opts);

/// Renders the document for a text-only model. plain: one reconstructed
/// line per output line. markdown: detected tables become pipe tables
/// (first row as header), everything else stays a plain line.
std::string serialize(const OcrDocument& doc, const SerializerOptions& opts);

}  // namespace harness
