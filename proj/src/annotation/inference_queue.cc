// Copyright 2026 The Prefchat Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "prefchat/annotation/inference_queue.h"

#include "prefchat/annotation/session.h"

namespace prefchat::annotation {

InferenceQueue::InferenceQueue(size_t capacity)
    : capacity_(capacity == 0 ? 1 : capacity), worker_([this] { Loop(); }) {}

InferenceQueue::~InferenceQueue() { Shutdown(); }

void InferenceQueue::Shutdown() {
  {
    std::lock_guard lock(mu_);
    stopping_ = true;
  }
  cv_.notify_all();
  if (worker_.joinable()) worker_.join();
}

void InferenceQueue::Enqueue(std::function<void()> job) {
  {
    std::lock_guard lock(mu_);
    if (stopping_) {
      throw ApiError(ApiError::Code::kUnavailable, "inference queue is shut down");
    }
    if (jobs_.size() >= capacity_) {
      throw ApiError(ApiError::Code::kUnavailable, "inference queue is full",
                     {{"capacity", capacity_}});
    }
    jobs_.push_back(std::move(job));
  }
  cv_.notify_one();
}

void InferenceQueue::Loop() {
  while (true) {
    std::function<void()> job;
    {
      std::unique_lock lock(mu_);
      cv_.wait(lock, [this] { return stopping_ || !jobs_.empty(); });
      if (jobs_.empty()) return;
      job = std::move(jobs_.front());
      jobs_.pop_front();
    }
    job();
  }
}

}  // namespace prefchat::annotation
