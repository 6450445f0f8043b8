#include "recov/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "recov/csv.hpp"
#include "recov/errors.hpp"

namespace recov {

namespace {

// Shortest representation that round-trips bit-exactly.
std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string basename_of(const std::string& path) {
    const auto pos = path.find_last_of("/\\");
    return pos == std::string::npos ? path : path.substr(pos + 1);
}

}  // namespace

std::string to_string(LabelKind kind) {
    switch (kind) {
        case LabelKind::classification: return "classification";
        case LabelKind::survival: return "survival";
        case LabelKind::ordinal: return "ordinal";
    }
    return "?";
}

LabelKind label_kind_from_string(const std::string& s) {
    if (s == "classification" || s == "clf") return LabelKind::classification;
    if (s == "survival" || s == "surv") return LabelKind::survival;
    if (s == "ordinal" || s == "ord") return LabelKind::ordinal;
    throw ValidationError("unknown task kind: '" + s + "'");
}

std::size_t LabelSet::size() const {
    switch (kind) {
        case LabelKind::classification: return class_index.size();
        case LabelKind::survival: return time.size();
        case LabelKind::ordinal: return grade.size();
    }
    return 0;
}

void LabelSet::validate() const {
    switch (kind) {
        case LabelKind::classification: {
            if (n_classes() < 2) throw ValidationError("classification needs at least 2 classes");
            for (int c : class_index) {
                if (c < 0 || c >= n_classes())
                    throw ValidationError("class index out of range");
            }
            break;
        }
        case LabelKind::survival: {
            if (time.size() != event.size())
                throw ValidationError("survival time/event length mismatch");
            for (double t : time) {
                if (!(t > 0.0) || !std::isfinite(t))
                    throw ValidationError("survival times must be positive and finite");
            }
            for (auto e : event) {
                if (e > 1) throw ValidationError("event indicator must be 0 or 1");
            }
            break;
        }
        case LabelKind::ordinal: {
            if (grade_max <= grade_min)
                throw ValidationError("ordinal grade range must have positive width");
            for (int g : grade) {
                if (g < grade_min || g > grade_max)
                    throw ValidationError("grade outside declared range");
            }
            break;
        }
    }
}

void Dataset::build_index() const {
    index_.clear();
    index_.reserve(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        auto [it, fresh] = index_.emplace(ids[i], static_cast<int>(i));
        if (!fresh) throw ValidationError("duplicate sample id: '" + ids[i] + "'");
    }
}

int Dataset::row_of(const std::string& id) const {
    if (index_.size() != ids.size()) build_index();
    const auto it = index_.find(id);
    if (it == index_.end()) throw ValidationError("unknown sample id: '" + id + "'");
    return it->second;
}

Dataset Dataset::subset(const std::vector<std::int32_t>& rows) const {
    Dataset out;
    out.name = name;
    out.feature_names = feature_names;
    out.ids.reserve(rows.size());
    out.features.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
    out.labels.kind = labels.kind;
    out.labels.class_names = labels.class_names;
    out.labels.grade_min = labels.grade_min;
    out.labels.grade_max = labels.grade_max;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto r = rows[i];
        if (r < 0 || static_cast<std::size_t>(r) >= n())
            throw ValidationError("subset row out of range");
        out.ids.push_back(ids[r]);
        out.features.row(static_cast<Eigen::Index>(i)) = features.row(r);
        switch (labels.kind) {
            case LabelKind::classification:
                out.labels.class_index.push_back(labels.class_index[r]);
                break;
            case LabelKind::survival:
                out.labels.time.push_back(labels.time[r]);
                out.labels.event.push_back(labels.event[r]);
                break;
            case LabelKind::ordinal:
                out.labels.grade.push_back(labels.grade[r]);
                break;
        }
    }
    return out;
}

void Dataset::validate() const {
    const std::size_t N = ids.size();
    if (static_cast<std::size_t>(features.rows()) != N)
        throw ValidationError("feature row count does not match id count");
    if (labels.size() != N) throw ValidationError("label count does not match id count");
    if (!feature_names.empty() && feature_names.size() != dim())
        throw ValidationError("feature name count does not match feature columns");
    build_index();  // throws on duplicate ids
    if (!features.allFinite()) throw ValidationError("features contain NaN or Inf");
    labels.validate();
}

double NoiseMask::noise_ratio() const {
    if (flags.empty()) return 0.0;
    return static_cast<double>(n_noisy()) / static_cast<double>(flags.size());
}

std::size_t NoiseMask::n_noisy() const {
    std::size_t c = 0;
    for (auto f : flags) c += (f != 0);
    return c;
}

void NoiseMask::validate() const {
    for (auto f : flags) {
        if (f > 1) throw ValidationError("noise mask flags must be 0 or 1");
    }
    if (source == Source::ground_truth && noise_ratio() >= 0.5)
        throw ValidationError("ground-truth noise ratio must be below 0.5");
}

double mask_accuracy(const NoiseMask& detected, const NoiseMask& truth) {
    if (detected.size() != truth.size() || detected.size() == 0)
        throw ValidationError("mask_accuracy: size mismatch or empty masks");
    std::size_t agree = 0;
    for (std::size_t i = 0; i < detected.size(); ++i)
        agree += (detected.flags[i] == truth.flags[i]);
    return static_cast<double>(agree) / static_cast<double>(detected.size());
}

namespace {

bool column_is_numeric(const CsvTable& table, std::size_t col) {
    for (const auto& row : table.rows) {
        if (!parse_double(row[col])) return false;
    }
    return !table.rows.empty();
}

[[noreturn]] void row_error(const std::string& path, std::size_t row, const std::string& what) {
    std::ostringstream msg;
    msg << path << ": line " << (row + 2) << ": " << what;  // +2: header + 1-based
    throw ValidationError(msg.str());
}

}  // namespace

Dataset load_dataset(const std::string& path, const DatasetSchema& schema) {
    const CsvTable table = read_csv(path);
    const std::size_t N = table.n_rows();
    if (N == 0) throw ValidationError(path + ": no data rows");

    std::vector<std::size_t> claimed;
    auto claim = [&](const std::string& name) {
        const std::size_t c = table.col(name);
        claimed.push_back(c);
        return c;
    };

    std::optional<std::size_t> id_col;
    if (!schema.id_column.empty()) id_col = claim(schema.id_column);

    std::optional<std::size_t> label_col, time_col, event_col;
    switch (schema.task) {
        case LabelKind::classification:
        case LabelKind::ordinal:
            if (schema.label_column.empty())
                throw ValidationError("schema: label column required for this task");
            label_col = claim(schema.label_column);
            break;
        case LabelKind::survival:
            if (schema.time_column.empty() || schema.event_column.empty())
                throw ValidationError("schema: time and event columns required for survival");
            time_col = claim(schema.time_column);
            event_col = claim(schema.event_column);
            break;
    }

    std::vector<std::size_t> feat_cols;
    std::vector<std::string> feat_names;
    if (!schema.feature_columns.empty()) {
        for (const auto& name : schema.feature_columns) {
            const std::size_t c = table.col(name);
            for (auto used : claimed) {
                if (used == c)
                    throw ValidationError("schema: column '" + name + "' claimed twice");
            }
            feat_cols.push_back(c);
            feat_names.push_back(name);
        }
    } else {
        for (std::size_t c = 0; c < table.n_cols(); ++c) {
            if (std::find(claimed.begin(), claimed.end(), c) != claimed.end()) continue;
            if (column_is_numeric(table, c)) {
                feat_cols.push_back(c);
                feat_names.push_back(table.columns[c]);
            }
        }
    }
    if (feat_cols.empty())
        throw ValidationError(path + ": no numeric feature columns found (categorical data? run encode first)");

    Dataset data;
    data.name = basename_of(path);
    data.feature_names = std::move(feat_names);
    data.features.resize(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(feat_cols.size()));
    data.ids.reserve(N);

    for (std::size_t r = 0; r < N; ++r) {
        const auto& row = table.rows[r];
        data.ids.push_back(id_col ? row[*id_col] : std::to_string(r));
        for (std::size_t j = 0; j < feat_cols.size(); ++j) {
            const auto v = parse_double(row[feat_cols[j]]);
            if (!v) row_error(path, r, "non-numeric feature value '" + row[feat_cols[j]] + "'");
            if (!std::isfinite(*v)) row_error(path, r, "non-finite feature value '" + row[feat_cols[j]] + "'");
            data.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = *v;
        }
    }

    LabelSet& labels = data.labels;
    labels.kind = schema.task;
    switch (schema.task) {
        case LabelKind::classification: {
            std::vector<std::string> tokens(N);
            for (std::size_t r = 0; r < N; ++r) tokens[r] = table.rows[r][*label_col];
            if (!schema.classes.empty()) {
                labels.class_names = schema.classes;
                std::sort(labels.class_names.begin(), labels.class_names.end());
            } else {
                std::set<std::string> distinct(tokens.begin(), tokens.end());
                labels.class_names.assign(distinct.begin(), distinct.end());
            }
            labels.class_index.resize(N);
            for (std::size_t r = 0; r < N; ++r) {
                const auto it = std::lower_bound(labels.class_names.begin(),
                                                 labels.class_names.end(), tokens[r]);
                if (it == labels.class_names.end() || *it != tokens[r])
                    row_error(path, r, "label '" + tokens[r] + "' outside declared class set");
                labels.class_index[r] = static_cast<int>(it - labels.class_names.begin());
            }
            break;
        }
        case LabelKind::survival: {
            labels.time.resize(N);
            labels.event.resize(N);
            for (std::size_t r = 0; r < N; ++r) {
                const auto t = parse_double(table.rows[r][*time_col]);
                if (!t || !std::isfinite(*t) || *t <= 0.0)
                    row_error(path, r, "survival time must be a positive number, got '" +
                                           table.rows[r][*time_col] + "'");
                const auto e = parse_int(table.rows[r][*event_col]);
                if (!e || (*e != 0 && *e != 1))
                    row_error(path, r, "event indicator must be 0 or 1, got '" +
                                           table.rows[r][*event_col] + "'");
                labels.time[r] = *t;
                labels.event[r] = static_cast<std::uint8_t>(*e);
            }
            break;
        }
        case LabelKind::ordinal: {
            labels.grade.resize(N);
            long long lo = 0, hi = 0;
            for (std::size_t r = 0; r < N; ++r) {
                const auto g = parse_int(table.rows[r][*label_col]);
                if (!g) row_error(path, r, "grade must be an integer, got '" +
                                               table.rows[r][*label_col] + "'");
                labels.grade[r] = static_cast<int>(*g);
                if (r == 0) lo = hi = *g;
                lo = std::min(lo, *g);
                hi = std::max(hi, *g);
            }
            labels.grade_min = schema.grade_min.value_or(static_cast<int>(lo));
            labels.grade_max = schema.grade_max.value_or(static_cast<int>(hi));
            for (std::size_t r = 0; r < N; ++r) {
                if (labels.grade[r] < labels.grade_min || labels.grade[r] > labels.grade_max)
                    row_error(path, r, "grade outside declared range");
            }
            break;
        }
    }

    data.validate();
    return data;
}

void save_dataset(const Dataset& data, const std::string& path) {
    data.validate();
    std::vector<std::string> columns{"id"};
    switch (data.labels.kind) {
        case LabelKind::classification: columns.push_back("label"); break;
        case LabelKind::survival:
            columns.push_back("time");
            columns.push_back("event");
            break;
        case LabelKind::ordinal: columns.push_back("label"); break;
    }
    for (std::size_t j = 0; j < data.dim(); ++j) {
        columns.push_back(data.feature_names.empty() ? "f" + std::to_string(j)
                                                     : data.feature_names[j]);
    }
    std::vector<std::vector<std::string>> rows;
    rows.reserve(data.n());
    for (std::size_t r = 0; r < data.n(); ++r) {
        std::vector<std::string> row{data.ids[r]};
        switch (data.labels.kind) {
            case LabelKind::classification:
                row.push_back(data.labels.class_names[data.labels.class_index[r]]);
                break;
            case LabelKind::survival:
                row.push_back(format_double(data.labels.time[r]));
                row.push_back(std::to_string(static_cast<int>(data.labels.event[r])));
                break;
            case LabelKind::ordinal:
                row.push_back(std::to_string(data.labels.grade[r]));
                break;
        }
        for (std::size_t j = 0; j < data.dim(); ++j)
            row.push_back(format_double(data.features(static_cast<Eigen::Index>(r),
                                                      static_cast<Eigen::Index>(j))));
        rows.push_back(std::move(row));
    }
    write_csv(path, columns, rows);
}

void save_noise_mask(const NoiseMask& mask, const std::vector<std::string>& ids,
                     const std::string& path) {
    if (mask.size() != ids.size())
        throw ValidationError("save_noise_mask: mask/id length mismatch");
    std::vector<std::vector<std::string>> rows;
    rows.reserve(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i)
        rows.push_back({ids[i], mask.flags[i] ? "1" : "0"});
    write_csv(path, {"id", "noisy"}, rows);
}

NoiseMask load_noise_mask(const std::string& path, const std::vector<std::string>& ids,
                          NoiseMask::Source source) {
    const CsvTable table = read_csv(path);
    const std::size_t id_col = table.col("id");
    const std::size_t noisy_col = table.col("noisy");
    std::unordered_map<std::string, std::uint8_t> by_id;
    by_id.reserve(table.n_rows());
    for (std::size_t r = 0; r < table.n_rows(); ++r) {
        const auto v = parse_int(table.rows[r][noisy_col]);
        if (!v || (*v != 0 && *v != 1))
            row_error(path, r, "noisy flag must be 0 or 1");
        if (!by_id.emplace(table.rows[r][id_col], static_cast<std::uint8_t>(*v)).second)
            row_error(path, r, "duplicate id '" + table.rows[r][id_col] + "'");
    }
    NoiseMask mask;
    mask.source = source;
    mask.flags.reserve(ids.size());
    for (const auto& id : ids) {
        const auto it = by_id.find(id);
        if (it == by_id.end())
            throw ValidationError(path + ": mask has no entry for id '" + id + "'");
        mask.flags.push_back(it->second);
    }
    mask.validate();
    return mask;
}

std::size_t encode_csv(const std::string& in_path, const std::string& out_path,
                       const EncodeOptions& options) {
    const CsvTable table = read_csv(in_path);
    if (table.n_rows() == 0) throw ValidationError(in_path + ": no data rows");

    std::vector<std::size_t> front_cols;  // id + passthrough, emitted verbatim
    if (!options.id_column.empty()) front_cols.push_back(table.col(options.id_column));
    for (const auto& name : options.passthrough_columns) front_cols.push_back(table.col(name));

    struct Encoded {
        std::string name;
        bool numeric;
        std::size_t src;
        std::vector<std::string> levels;  // categorical, sorted
        double mean = 0.0, std = 1.0;     // numeric z-scoring
    };
    std::vector<Encoded> plan;
    std::size_t out_features = 0;
    for (std::size_t c = 0; c < table.n_cols(); ++c) {
        if (std::find(front_cols.begin(), front_cols.end(), c) != front_cols.end()) continue;
        Encoded enc;
        enc.name = table.columns[c];
        enc.src = c;
        enc.numeric = column_is_numeric(table, c);
        if (enc.numeric) {
            if (options.zscore_numeric) {
                double sum = 0.0, sq = 0.0;
                for (const auto& row : table.rows) {
                    const double v = *parse_double(row[c]);
                    sum += v;
                    sq += v * v;
                }
                const double n = static_cast<double>(table.n_rows());
                enc.mean = sum / n;
                const double var = std::max(0.0, sq / n - enc.mean * enc.mean);
                enc.std = var > 1e-24 ? std::sqrt(var) : 1.0;
            }
            out_features += 1;
        } else {
            std::set<std::string> levels;
            for (const auto& row : table.rows) levels.insert(row[c]);
            enc.levels.assign(levels.begin(), levels.end());
            out_features += enc.levels.size();
        }
        plan.push_back(std::move(enc));
    }
    if (out_features == 0) throw ValidationError(in_path + ": nothing to encode");

    std::vector<std::string> columns;
    for (auto c : front_cols) columns.push_back(table.columns[c]);
    for (const auto& enc : plan) {
        if (enc.numeric) {
            columns.push_back(enc.name);
        } else {
            for (const auto& level : enc.levels) columns.push_back(enc.name + "=" + level);
        }
    }

    std::vector<std::vector<std::string>> rows;
    rows.reserve(table.n_rows());
    for (const auto& src_row : table.rows) {
        std::vector<std::string> row;
        row.reserve(columns.size());
        for (auto c : front_cols) row.push_back(src_row[c]);
        for (const auto& enc : plan) {
            if (enc.numeric) {
                const double v = *parse_double(src_row[enc.src]);
                row.push_back(options.zscore_numeric ? format_double((v - enc.mean) / enc.std)
                                                     : src_row[enc.src]);
            } else {
                for (const auto& level : enc.levels)
                    row.push_back(src_row[enc.src] == level ? "1" : "0");
            }
        }
        rows.push_back(std::move(row));
    }
    write_csv(out_path, columns, rows);
    return out_features;
}

}  // namespace recov
