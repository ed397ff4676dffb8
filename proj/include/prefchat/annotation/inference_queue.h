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

#ifndef PREFCHAT_ANNOTATION_INFERENCE_QUEUE_H_
#define PREFCHAT_ANNOTATION_INFERENCE_QUEUE_H_

#include <condition_variable>
#include <cstddef>
#include <deque>
#include <functional>
#include <future>
#include <mutex>
#include <thread>

namespace prefchat::annotation {

// Bounded queue drained by a single worker thread, so model calls never run
// concurrently.
class InferenceQueue {
 public:
  explicit InferenceQueue(size_t capacity);
  ~InferenceQueue();
  InferenceQueue(const InferenceQueue&) = delete;
  InferenceQueue& operator=(const InferenceQueue&) = delete;

  // Runs `fn` on the worker and waits for it. Throws ApiError(kUnavailable)
  // when the queue is full or shut down; exceptions from `fn` propagate.
  template <typename F>
  auto Run(F fn) -> decltype(fn()) {
    using R = decltype(fn());
    auto task = std::make_shared<std::packaged_task<R()>>(std::move(fn));
    std::future<R> result = task->get_future();
    Enqueue([task] { (*task)(); });
    return result.get();
  }

  size_t capacity() const { return capacity_; }
  void Shutdown();

 private:
  void Enqueue(std::function<void()> job);
  void Loop();

  const size_t capacity_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::function<void()>> jobs_;
  bool stopping_ = false;
  std::thread worker_;
};

}  // namespace prefchat::annotation

#endif  // PREFCHAT_ANNOTATION_INFERENCE_QUEUE_H_
