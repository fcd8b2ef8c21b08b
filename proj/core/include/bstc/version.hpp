#pragma once

namespace bstc {

const char* library_version();

}  // namespace bstc
