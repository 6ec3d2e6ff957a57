#include "wospp/trace_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include <fmt/format.h>

#include "scenario_json.hpp"

namespace wospp {

namespace {

const char* const kTraceColumns =
    "timestep,id,x,y,state,timer,candidate,leader,periphery,estimate_x,estimate_y,n_est,channel";
const char* const kMetricsColumns = "timestep,channel,name,value";
const char* const kAggregateColumns = "timestep,channel,name,mean,std,count";

std::string channel_text(const std::optional<int>& ch) {
    return ch ? std::to_string(*ch) : std::string();
}

// Text in CSV notes must not break the row structure.
std::string sanitize(const std::string& text) {
    std::string out = text;
    std::replace(out.begin(), out.end(), '\n', ' ');
    std::replace(out.begin(), out.end(), '\r', ' ');
    return out;
}

}  // namespace

std::string format_number(double v) {
    if (v == 0.0) return "0";  // folds -0
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, res.ptr};
}

std::string metadata_line(std::string_view schema, const Scenario& scenario) {
    detail::json meta{{"schema", std::string(schema)},
                      {"version", kTraceSchemaVersion},
                      {"seed", scenario.sim.rng_seed},
                      {"scenario", detail::scenario_to_json(scenario)}};
    return meta.dump();
}

void TraceWriter::header(const std::string& metadata) {
    out_ << metadata << '\n' << kTraceColumns << '\n';
}

void TraceWriter::snapshot(const SwarmState& state) {
    std::string row;
    for (const auto& layer : state.layers) {
        for (std::size_t i = 0; i < state.size(); ++i) {
            const auto& c = layer.cores[i];
            const auto& s = layer.scratch[i];
            row.clear();
            row += std::to_string(state.timestep);
            row += ',';
            row += std::to_string(i);
            row += ',';
            row += format_number(state.positions[i].x);
            row += ',';
            row += format_number(state.positions[i].y);
            row += ',';
            row += to_string(c.state);
            row += ',';
            if (c.timer) row += std::to_string(*c.timer);
            row += ',';
            row += s.candidate ? '1' : '0';
            row += ',';
            row += s.leader ? '1' : '0';
            row += ',';
            row += s.periphery ? '1' : '0';
            row += ',';
            if (s.estimate_bearing) row += format_number(s.estimate_bearing->x);
            row += ',';
            if (s.estimate_bearing) row += format_number(s.estimate_bearing->y);
            row += ',';
            row += format_number(s.n_est);
            row += ',';
            row += std::to_string(layer.channel);
            row += '\n';
            out_ << row;
        }
    }
}

void TraceWriter::note(std::int64_t timestep, const std::string& text) {
    out_ << "#note," << timestep << ',' << sanitize(text) << '\n';
}

void MetricsWriter::header(const std::string& metadata) {
    out_ << metadata << '\n' << kMetricsColumns << '\n';
}

void MetricsWriter::samples(const std::vector<MetricSample>& samples) {
    for (const auto& m : samples)
        out_ << m.timestep << ',' << channel_text(m.channel) << ',' << m.name << ','
             << format_number(m.value) << '\n';
}

FileSink::FileSink(const Scenario& scenario, std::optional<std::string> trace_path,
                   std::optional<std::string> metrics_path)
    : period_(scenario.outputs.snapshot_period),
      trace_path_(std::move(trace_path)),
      metrics_path_(std::move(metrics_path)) {
    if (trace_path_) {
        trace_file_.open(*trace_path_ + ".partial", std::ios::binary | std::ios::trunc);
        if (!trace_file_) throw IoError(fmt::format("cannot open trace output '{}'", *trace_path_));
        trace_ = std::make_unique<TraceWriter>(trace_file_);
        trace_->header(metadata_line("wospp.trace", scenario));
    }
    if (metrics_path_) {
        metrics_file_.open(*metrics_path_ + ".partial", std::ios::binary | std::ios::trunc);
        if (!metrics_file_) throw IoError(fmt::format("cannot open metrics output '{}'", *metrics_path_));
        metrics_ = std::make_unique<MetricsWriter>(metrics_file_);
        metrics_->header(metadata_line("wospp.metrics", scenario));
    }
}

FileSink::~FileSink() {
    if (committed_) return;
    trace_file_.close();
    metrics_file_.close();
    if (trace_path_) std::remove((*trace_path_ + ".partial").c_str());
    if (metrics_path_) std::remove((*metrics_path_ + ".partial").c_str());
}

void FileSink::check(std::ostream& s, const std::string& path) const {
    if (!s) throw IoError(fmt::format("write failed for '{}'", path));
}

void FileSink::record(const SwarmState& state) {
    if (trace_) {
        trace_->snapshot(state);
        check(trace_file_, *trace_path_);
    }
    if (metrics_ || keep_) {
        auto samples = collect_metrics(state);
        if (metrics_) {
            metrics_->samples(samples);
            check(metrics_file_, *metrics_path_);
        }
        if (keep_) kept_.insert(kept_.end(), samples.begin(), samples.end());
    }
}

void FileSink::begin(const SwarmState& state) { record(state); }

void FileSink::on_step(const SwarmState& state, const StepEvents&) {
    if (state.timestep % period_ == 0) record(state);
}

void FileSink::on_note(std::int64_t timestep, const std::string& text) {
    if (trace_) trace_->note(timestep, text);
}

void FileSink::commit() {
    auto finish = [](std::ofstream& f, const std::optional<std::string>& path) {
        if (!path) return;
        f.close();
        if (!f) throw IoError(fmt::format("write failed for '{}'", *path));
        if (std::rename((*path + ".partial").c_str(), path->c_str()) != 0)
            throw IoError(fmt::format("cannot move output into place at '{}'", *path));
    };
    finish(trace_file_, trace_path_);
    finish(metrics_file_, metrics_path_);
    committed_ = true;
}

std::vector<AggregateRow> aggregate_samples(const std::vector<std::vector<MetricSample>>& runs) {
    using Key = std::tuple<std::int64_t, int, std::string>;
    std::map<Key, std::vector<double>> groups;
    for (const auto& run : runs)
        for (const auto& m : run) groups[{m.timestep, m.channel.value_or(-1), m.name}].push_back(m.value);

    std::vector<AggregateRow> rows;
    rows.reserve(groups.size());
    for (auto& [key, values] : groups) {
        // Sorting first makes the sums independent of run order.
        std::sort(values.begin(), values.end());
        double sum = 0.0;
        for (double v : values) sum += v;
        const double mean = sum / static_cast<double>(values.size());
        double ss = 0.0;
        for (double v : values) ss += (v - mean) * (v - mean);
        AggregateRow row;
        row.timestep = std::get<0>(key);
        if (std::get<1>(key) >= 0) row.channel = std::get<1>(key);
        row.name = std::get<2>(key);
        row.mean = mean;
        row.std = values.size() > 1 ? std::sqrt(ss / static_cast<double>(values.size() - 1)) : 0.0;
        row.count = static_cast<int>(values.size());
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_aggregate(std::ostream& out, const std::string& metadata,
                     const std::vector<AggregateRow>& rows) {
    out << metadata << '\n' << kAggregateColumns << '\n';
    for (const auto& r : rows)
        out << r.timestep << ',' << channel_text(r.channel) << ',' << r.name << ','
            << format_number(r.mean) << ',' << format_number(r.std) << ',' << r.count << '\n';
}

}  // namespace wospp
