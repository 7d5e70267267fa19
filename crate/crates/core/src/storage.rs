//! Large, lazily committed buffers for PDFs and adjacency data.
//!
//! Buffers come straight from anonymous `mmap`, so pages are only
//! committed when a worker first writes them. Every lattice builder relies
//! on that to honor the first-touch contract. The start address is aligned
//! to 2 MiB so padding offsets computed relative to the buffer start map
//! to the same cache and TLB sets as absolute addresses would.

use std::marker::PhantomData;
use std::ops::{Deref, DerefMut};

use crate::error::{Error, Result};

pub const HUGE_PAGE: usize = 2 << 20;

/// Element types that may live in a [`PageBuf`]: all-zero bytes must be a
/// valid value.
pub trait Zeroable: Copy + Send + Sync + 'static {}
impl Zeroable for f64 {}
impl Zeroable for u32 {}
impl Zeroable for u64 {}

pub struct PageBuf<T: Zeroable> {
    ptr: *mut T,
    len: usize,
    map_base: *mut u8,
    map_len: usize,
    huge_pages: bool,
    _marker: PhantomData<T>,
}

unsafe impl<T: Zeroable> Send for PageBuf<T> {}
unsafe impl<T: Zeroable> Sync for PageBuf<T> {}

impl<T: Zeroable> PageBuf<T> {
    /// Zero-initialized buffer of `len` elements whose pages are untouched.
    pub fn zeroed(len: usize) -> Result<Self> {
        let bytes = len.checked_mul(std::mem::size_of::<T>()).ok_or(Error::Alloc { bytes: usize::MAX })?;
        if bytes == 0 {
            return Ok(PageBuf {
                ptr: std::ptr::NonNull::dangling().as_ptr(),
                len: 0,
                map_base: std::ptr::null_mut(),
                map_len: 0,
                huge_pages: false,
                _marker: PhantomData,
            });
        }
        Self::map(len, bytes)
    }

    #[cfg(unix)]
    fn map(len: usize, bytes: usize) -> Result<Self> {
        let map_len = bytes + HUGE_PAGE;
        // SAFETY: anonymous private mapping, no file descriptor involved.
        let base = unsafe {
            libc::mmap(
                std::ptr::null_mut(),
                map_len,
                libc::PROT_READ | libc::PROT_WRITE,
                libc::MAP_PRIVATE | libc::MAP_ANONYMOUS | libc::MAP_NORESERVE,
                -1,
                0,
            )
        };
        if base == libc::MAP_FAILED {
            return Err(Error::Alloc { bytes });
        }
        let base = base as *mut u8;
        let misalign = (base as usize) % HUGE_PAGE;
        let shift = if misalign == 0 { 0 } else { HUGE_PAGE - misalign };
        // SAFETY: shift < HUGE_PAGE, so the aligned region stays inside the mapping.
        let ptr = unsafe { base.add(shift) } as *mut T;
        let huge_pages = advise_huge_pages(ptr as *mut u8, bytes);
        Ok(PageBuf { ptr, len, map_base: base, map_len, huge_pages, _marker: PhantomData })
    }

    #[cfg(not(unix))]
    fn map(len: usize, bytes: usize) -> Result<Self> {
        let layout = std::alloc::Layout::from_size_align(bytes, HUGE_PAGE)
            .map_err(|_| Error::Alloc { bytes })?;
        // SAFETY: layout has non-zero size.
        let ptr = unsafe { std::alloc::alloc_zeroed(layout) };
        if ptr.is_null() {
            return Err(Error::Alloc { bytes });
        }
        Ok(PageBuf {
            ptr: ptr as *mut T,
            len,
            map_base: ptr,
            map_len: bytes,
            huge_pages: false,
            _marker: PhantomData,
        })
    }

    /// Whether the kernel accepted the transparent huge page hint.
    pub fn huge_pages(&self) -> bool {
        self.huge_pages
    }

    pub fn as_shared(&mut self) -> SharedMut<T> {
        SharedMut { ptr: self.ptr, len: self.len }
    }
}

#[cfg(target_os = "linux")]
fn advise_huge_pages(ptr: *mut u8, bytes: usize) -> bool {
    if bytes < HUGE_PAGE {
        return false;
    }
    // SAFETY: the range lies inside a live mapping owned by the caller.
    unsafe { libc::madvise(ptr as *mut libc::c_void, bytes, libc::MADV_HUGEPAGE) == 0 }
}

#[cfg(all(unix, not(target_os = "linux")))]
fn advise_huge_pages(_ptr: *mut u8, _bytes: usize) -> bool {
    false
}

impl<T: Zeroable> Drop for PageBuf<T> {
    fn drop(&mut self) {
        if self.map_len == 0 {
            return;
        }
        #[cfg(unix)]
        // SAFETY: unmaps exactly the region returned by mmap in `map`.
        unsafe {
            libc::munmap(self.map_base as *mut libc::c_void, self.map_len);
        }
        #[cfg(not(unix))]
        unsafe {
            std::alloc::dealloc(
                self.map_base,
                std::alloc::Layout::from_size_align_unchecked(self.map_len, HUGE_PAGE),
            );
        }
    }
}

impl<T: Zeroable> Deref for PageBuf<T> {
    type Target = [T];

    fn deref(&self) -> &[T] {
        // SAFETY: ptr is valid for len elements, zero-initialized.
        unsafe { std::slice::from_raw_parts(self.ptr, self.len) }
    }
}

impl<T: Zeroable> DerefMut for PageBuf<T> {
    fn deref_mut(&mut self) -> &mut [T] {
        // SAFETY: unique borrow of the buffer.
        unsafe { std::slice::from_raw_parts_mut(self.ptr, self.len) }
    }
}

impl<T: Zeroable + std::fmt::Debug> std::fmt::Debug for PageBuf<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PageBuf").field("len", &self.len).field("huge_pages", &self.huge_pages).finish()
    }
}

/// Raw view of a buffer shared by workers that write disjoint elements.
///
/// Kernels hand one of these to every worker of a sweep. Soundness relies
/// on the slot-ownership rule of each kernel: within one sub-step every
/// element is written by at most one worker and never read by another.
#[derive(Clone, Copy)]
pub struct SharedMut<T> {
    ptr: *mut T,
    len: usize,
}

unsafe impl<T: Send> Send for SharedMut<T> {}
unsafe impl<T: Send> Sync for SharedMut<T> {}

impl<T: Copy> SharedMut<T> {
    pub fn from_slice(s: &mut [T]) -> Self {
        SharedMut { ptr: s.as_mut_ptr(), len: s.len() }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// # Safety
    /// `i < len` and no other worker writes element `i` concurrently.
    #[inline(always)]
    pub unsafe fn read(&self, i: usize) -> T {
        debug_assert!(i < self.len, "index {i} out of {}", self.len);
        *self.ptr.add(i)
    }

    /// # Safety
    /// `i < len` and element `i` is owned by the calling worker.
    #[inline(always)]
    pub unsafe fn write(&self, i: usize, v: T) {
        debug_assert!(i < self.len, "index {i} out of {}", self.len);
        *self.ptr.add(i) = v;
    }

    #[inline(always)]
    pub fn as_ptr(&self) -> *mut T {
        self.ptr
    }
}
