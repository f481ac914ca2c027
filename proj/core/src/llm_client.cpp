#include <chrono>
#include <fstream>
#include <thread>

#include "cypherforge/llm.hpp"

namespace cypherforge::llm {

namespace {

int64_t now_us() {
    return std::chrono::duration_cast<std::chrono::microseconds>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

int64_t wall_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

}  // namespace

Json Transcript::to_json() const {
    Json j;
    j["step_id"] = step_id;
    j["request"] = request.to_json();
    j["response"] = {{"content", response.content}, {"provider_meta", response.provider_meta}};
    j["timestamp_ms"] = timestamp_ms;
    return j;
}

Client::Client(std::shared_ptr<Provider> provider, RateLimit limit)
    : provider_(std::move(provider)), limit_(limit), tokens_(limit.burst), last_refill_us_(now_us()) {}

void Client::set_transcript_sink(TranscriptSink sink) { sink_ = std::move(sink); }

void Client::throttle() {
    if (limit_.requests_per_second <= 0) return;
    while (true) {
        {
            std::lock_guard<std::mutex> lock(mutex_);
            int64_t now = now_us();
            double elapsed_s = static_cast<double>(now - last_refill_us_) / 1e6;
            tokens_ = std::min<double>(limit_.burst,
                                       tokens_ + elapsed_s * limit_.requests_per_second);
            last_refill_us_ = now;
            if (tokens_ >= 1.0) {
                tokens_ -= 1.0;
                return;
            }
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
}

ChatResponse Client::complete(const std::string& step_id, const ChatRequest& request) {
    throttle();
    ChatResponse response = provider_->complete(step_id, request);
    if (sink_) {
        Transcript t;
        t.step_id = step_id;
        t.request = request;
        t.response = response;
        if (provider_->deterministic()) {
            std::lock_guard<std::mutex> lock(mutex_);
            t.timestamp_ms = logical_clock_++;
        } else {
            t.timestamp_ms = wall_ms();
        }
        sink_(t);
    }
    return response;
}

Client::TranscriptSink jsonl_transcript_sink(const std::string& path) {
    auto out = std::make_shared<std::ofstream>(path, std::ios::trunc);
    auto mutex = std::make_shared<std::mutex>();
    return [out, mutex](const Transcript& t) {
        std::lock_guard<std::mutex> lock(*mutex);
        (*out) << t.to_json().dump() << '\n';
        out->flush();
    };
}

}  // namespace cypherforge::llm
