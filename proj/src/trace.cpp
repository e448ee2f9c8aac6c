#include "lockstep/trace.hpp"

#include <zlib.h>

#include <charconv>
#include <cstdio>
#include <stdexcept>

namespace lockstep {

std::string_view to_string(TraceKind kind) noexcept {
    switch (kind) {
    case TraceKind::consume: return "consume";
    case TraceKind::produce: return "produce";
    case TraceKind::held: return "held";
    case TraceKind::inject: return "inject";
    case TraceKind::eject: return "eject";
    }
    return "?";
}

namespace {

void append_number(std::string& out, std::uint64_t value) {
    char buf[24];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    out.append(buf, end);
}

} // namespace

void append_canonical_line(std::string& out, const TraceEvent& event) {
    append_number(out, event.cycle);
    out.push_back(',');
    append_number(out, event.unit);
    out.push_back(',');
    out.append(to_string(event.kind));
    out.push_back(',');
    append_number(out, event.message);
    out.push_back('\n');
}

struct TraceFileWriter::Impl {
    std::FILE* plain = nullptr;
    gzFile gz = nullptr;
};

TraceFileWriter::TraceFileWriter(const std::string& path) : impl_(std::make_unique<Impl>()) {
    if (path.size() >= 3 && path.ends_with(".gz")) {
        impl_->gz = gzopen(path.c_str(), "wb");
    } else {
        impl_->plain = std::fopen(path.c_str(), "wb");
    }
    if (impl_->gz == nullptr && impl_->plain == nullptr) {
        throw std::runtime_error("cannot open trace file '" + path + "'");
    }
}

TraceFileWriter::~TraceFileWriter() {
    try {
        finish();
    } catch (...) {
    }
}

void TraceFileWriter::on_event(const TraceEvent& event) {
    append_canonical_line(buffer_, event);
    if (buffer_.size() >= (1u << 16)) {
        flush();
    }
}

void TraceFileWriter::flush() {
    if (buffer_.empty()) {
        return;
    }
    if (impl_->gz != nullptr) {
        if (gzwrite(impl_->gz, buffer_.data(), static_cast<unsigned>(buffer_.size())) == 0) {
            throw std::runtime_error("gzip trace write failed");
        }
    } else if (impl_->plain != nullptr) {
        if (std::fwrite(buffer_.data(), 1, buffer_.size(), impl_->plain) != buffer_.size()) {
            throw std::runtime_error("trace write failed");
        }
    }
    buffer_.clear();
}

void TraceFileWriter::finish() {
    flush();
    if (impl_->gz != nullptr) {
        gzclose(impl_->gz);
        impl_->gz = nullptr;
    }
    if (impl_->plain != nullptr) {
        std::fclose(impl_->plain);
        impl_->plain = nullptr;
    }
}

void TraceRecorder::record(const TraceEvent& event) {
    line_.clear();
    append_canonical_line(line_, event);
    hasher_.update(line_);
    ++count_;
    for (TraceSink* sink : sinks_) {
        sink->on_event(event);
    }
}

void TraceRecorder::finish() {
    for (TraceSink* sink : sinks_) {
        sink->finish();
    }
}

std::uint64_t trace_hash(const std::vector<TraceEvent>& events) {
    TraceRecorder recorder;
    for (const auto& e : events) {
        recorder.record(e);
    }
    return recorder.hash();
}

} // namespace lockstep
