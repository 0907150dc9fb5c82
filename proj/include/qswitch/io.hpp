#pragma once

// File output helpers: locale-independent CSV, atomic writes, and the
// JSON-lines serialization of tomography records.

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qswitch/errors.hpp"
#include "qswitch/tomography.hpp"

namespace qswitch {

// shortest round-trip decimal representation, '.' separator, no locale
inline std::string format_double(double v) {
    std::array<char, 32> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

// Writes via a temporary file in the same directory and renames into place.
inline void atomic_write_file(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw config_error("cannot open for writing: " + tmp.string());
        out << content;
        if (!out)
            throw config_error("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header) {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (i) body_ += ',';
            body_ += header[i];
        }
        body_ += '\n';
        columns_ = header.size();
    }

    void row(const std::vector<double>& values) {
        if (values.size() != columns_)
            throw config_error("CsvWriter: column count mismatch");
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (i) body_ += ',';
            body_ += format_double(values[i]);
        }
        body_ += '\n';
    }

    const std::string& str() const { return body_; }

private:
    std::string body_;
    std::size_t columns_ = 0;
};

// --- tomography record serialization (JSON lines) ---------------------------

inline nlohmann::json record_to_json(const TomographyRecord& rec) {
    return nlohmann::json{{"input", rec.input_state_id},
                          {"basis", rec.basis},
                          {"populations",
                           {rec.populations(0), rec.populations(1), rec.populations(2),
                            rec.populations(3)}},
                          {"shots", rec.shots}};
}

inline TomographyRecord record_from_json(const nlohmann::json& j) {
    TomographyRecord rec;
    rec.input_state_id = j.at("input").get<int>();
    rec.basis = j.at("basis").get<std::string>();
    const auto& pops = j.at("populations");
    if (!pops.is_array() || pops.size() != 4)
        throw config_error("tomography record: populations must be a 4-array");
    for (int i = 0; i < 4; ++i) rec.populations(i) = pops[static_cast<std::size_t>(i)].get<double>();
    rec.shots = j.at("shots").get<long>();
    rec.validate();
    return rec;
}

// First line is a meta object (gate label, calibrated phases, readout matrix);
// each following line is one record.
inline std::string records_to_jsonl(const std::vector<TomographyRecord>& records,
                                    const nlohmann::json& meta) {
    std::string out = nlohmann::json{{"meta", meta}}.dump();
    out += '\n';
    for (const auto& rec : records) {
        out += record_to_json(rec).dump();
        out += '\n';
    }
    return out;
}

struct RecordFile {
    nlohmann::json meta;
    std::vector<TomographyRecord> records;
};

inline RecordFile records_from_jsonl(const std::string& content) {
    RecordFile file;
    std::size_t pos = 0;
    bool first = true;
    while (pos < content.size()) {
        std::size_t eol = content.find('\n', pos);
        if (eol == std::string::npos) eol = content.size();
        const std::string line = content.substr(pos, eol - pos);
        pos = eol + 1;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw config_error(std::string("bad record line: ") + e.what());
        }
        if (first && j.contains("meta")) {
            file.meta = j.at("meta");
            first = false;
            continue;
        }
        first = false;
        file.records.push_back(record_from_json(j));
    }
    return file;
}

} // namespace qswitch
